#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sympkan::systems {

enum class SystemKind { kSpringMass, kPendulum, kTwoBody, kThreeBody };

// Closed-form benchmark system. States are packed z = [q; p] with dof
// entries each. The n-body systems are planar, so dof = 2 * bodies.
struct SystemSpec {
  SystemKind kind = SystemKind::kSpringMass;
  std::string name;
  int dof = 1;
  int bodies = 0;              // 0 for the one-dof systems
  double mass = 1.0;           // spring / pendulum mass
  double spring_k = 1.0;
  double length = 1.0;         // pendulum arm
  double gravity = 3.0;        // pendulum g
  double g_grav = 1.0;         // gravitational constant
  std::vector<double> masses;  // per body

  int dim() const { return 2 * dof; }

  static SystemSpec spring_mass();
  static SystemSpec pendulum();
  static SystemSpec two_body();
  static SystemSpec three_body();
  static SystemSpec from_name(std::string_view name);
  static const std::vector<std::string>& names();
};

// Total energy. Throws SingularityError if two bodies sit closer than 1e-9.
double hamiltonian(const SystemSpec& spec, std::span<const double> z);

// Exact field (dq/dt, dp/dt) from the hand-derived partials.
void true_vector_field(const SystemSpec& spec, std::span<const double> z,
                       std::span<double> out);

// Separable pieces for the symplectic integrator: every benchmark has
// H = T(p) + V(q).
void kinetic_gradient(const SystemSpec& spec, std::span<const double> p,
                      std::span<double> out);  // dT/dp = dq/dt
void potential_gradient(const SystemSpec& spec, std::span<const double> q,
                        std::span<double> out);  // dV/dq = -dp/dt

}  // namespace sympkan::systems
