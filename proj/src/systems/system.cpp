#include "sympkan/systems/system.hpp"

#include <cmath>

#include "sympkan/errors.hpp"

namespace sympkan::systems {

namespace {

constexpr double kMinSeparation = 1e-9;

void check_dim(const SystemSpec& spec, std::size_t got, const char* what) {
  if (got != static_cast<std::size_t>(spec.dim()))
    throw ShapeError(spec.name + " expects " + std::to_string(spec.dim()) +
                     " state components, got " + std::to_string(got) + " (" +
                     what + ")");
}

double body_distance(std::span<const double> q, int i, int j) {
  const double dx = q[2 * i] - q[2 * j];
  const double dy = q[2 * i + 1] - q[2 * j + 1];
  const double r = std::sqrt(dx * dx + dy * dy);
  if (r < kMinSeparation)
    throw SingularityError("bodies " + std::to_string(i) + " and " +
                           std::to_string(j) + " coincide (separation " +
                           std::to_string(r) + ")");
  return r;
}

}  // namespace

SystemSpec SystemSpec::spring_mass() {
  SystemSpec s;
  s.kind = SystemKind::kSpringMass;
  s.name = "spring";
  s.dof = 1;
  s.mass = 1.0;
  s.spring_k = 1.0;
  return s;
}

SystemSpec SystemSpec::pendulum() {
  SystemSpec s;
  s.kind = SystemKind::kPendulum;
  s.name = "pendulum";
  s.dof = 1;
  s.mass = 0.5;
  s.length = 1.0;
  s.gravity = 3.0;
  return s;
}

SystemSpec SystemSpec::two_body() {
  SystemSpec s;
  s.kind = SystemKind::kTwoBody;
  s.name = "two_body";
  s.dof = 4;
  s.bodies = 2;
  s.g_grav = 1.0;
  s.masses = {1.0, 1.0};
  return s;
}

SystemSpec SystemSpec::three_body() {
  SystemSpec s;
  s.kind = SystemKind::kThreeBody;
  s.name = "three_body";
  s.dof = 6;
  s.bodies = 3;
  s.g_grav = 1.0;
  s.masses = {1.0, 1.0, 1.0};
  return s;
}

const std::vector<std::string>& SystemSpec::names() {
  static const std::vector<std::string> all = {"spring", "pendulum", "two_body",
                                               "three_body"};
  return all;
}

SystemSpec SystemSpec::from_name(std::string_view name) {
  if (name == "spring") return spring_mass();
  if (name == "pendulum") return pendulum();
  if (name == "two_body") return two_body();
  if (name == "three_body") return three_body();
  throw UsageError("unknown system '" + std::string(name) +
                   "' (expected spring, pendulum, two_body, or three_body)");
}

double hamiltonian(const SystemSpec& spec, std::span<const double> z) {
  check_dim(spec, z.size(), "hamiltonian");
  const int d = spec.dof;
  const std::span<const double> q = z.first(static_cast<std::size_t>(d));
  const std::span<const double> p = z.last(static_cast<std::size_t>(d));

  switch (spec.kind) {
    case SystemKind::kSpringMass:
      return p[0] * p[0] / (2.0 * spec.mass) +
             0.5 * spec.spring_k * q[0] * q[0];
    case SystemKind::kPendulum: {
      const double ml2 = spec.mass * spec.length * spec.length;
      return p[0] * p[0] / (2.0 * ml2) +
             2.0 * spec.mass * spec.gravity * spec.length *
                 (1.0 - std::cos(q[0]));
    }
    case SystemKind::kTwoBody:
    case SystemKind::kThreeBody: {
      double h = 0.0;
      for (int i = 0; i < spec.bodies; ++i) {
        const double px = p[2 * i];
        const double py = p[2 * i + 1];
        h += (px * px + py * py) / (2.0 * spec.masses[static_cast<std::size_t>(i)]);
      }
      for (int i = 0; i < spec.bodies; ++i)
        for (int j = i + 1; j < spec.bodies; ++j)
          h -= spec.g_grav * spec.masses[static_cast<std::size_t>(i)] *
               spec.masses[static_cast<std::size_t>(j)] / body_distance(q, i, j);
      return h;
    }
  }
  throw UsageError("bad system kind");
}

void kinetic_gradient(const SystemSpec& spec, std::span<const double> p,
                      std::span<double> out) {
  if (p.size() != static_cast<std::size_t>(spec.dof) || out.size() != p.size())
    throw ShapeError("kinetic gradient expects dof-sized spans");
  switch (spec.kind) {
    case SystemKind::kSpringMass:
      out[0] = p[0] / spec.mass;
      return;
    case SystemKind::kPendulum:
      out[0] = p[0] / (spec.mass * spec.length * spec.length);
      return;
    case SystemKind::kTwoBody:
    case SystemKind::kThreeBody:
      for (int i = 0; i < spec.bodies; ++i) {
        const double m = spec.masses[static_cast<std::size_t>(i)];
        out[2 * i] = p[2 * i] / m;
        out[2 * i + 1] = p[2 * i + 1] / m;
      }
      return;
  }
  throw UsageError("bad system kind");
}

void potential_gradient(const SystemSpec& spec, std::span<const double> q,
                        std::span<double> out) {
  if (q.size() != static_cast<std::size_t>(spec.dof) || out.size() != q.size())
    throw ShapeError("potential gradient expects dof-sized spans");
  switch (spec.kind) {
    case SystemKind::kSpringMass:
      out[0] = spec.spring_k * q[0];
      return;
    case SystemKind::kPendulum:
      out[0] = 2.0 * spec.mass * spec.gravity * spec.length * std::sin(q[0]);
      return;
    case SystemKind::kTwoBody:
    case SystemKind::kThreeBody: {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.0;
      for (int i = 0; i < spec.bodies; ++i) {
        for (int j = i + 1; j < spec.bodies; ++j) {
          const double r = body_distance(q, i, j);
          const double c = spec.g_grav * spec.masses[static_cast<std::size_t>(i)] *
                           spec.masses[static_cast<std::size_t>(j)] / (r * r * r);
          const double dx = q[2 * i] - q[2 * j];
          const double dy = q[2 * i + 1] - q[2 * j + 1];
          out[2 * i] += c * dx;
          out[2 * i + 1] += c * dy;
          out[2 * j] -= c * dx;
          out[2 * j + 1] -= c * dy;
        }
      }
      return;
    }
  }
  throw UsageError("bad system kind");
}

void true_vector_field(const SystemSpec& spec, std::span<const double> z,
                       std::span<double> out) {
  check_dim(spec, z.size(), "field input");
  check_dim(spec, out.size(), "field output");
  const std::size_t d = static_cast<std::size_t>(spec.dof);
  kinetic_gradient(spec, z.last(d), out.first(d));    // dq/dt =  dT/dp
  potential_gradient(spec, z.first(d), out.last(d));  // dp/dt = -dV/dq
  for (std::size_t i = 0; i < d; ++i) out[d + i] = -out[d + i];
}

}  // namespace sympkan::systems
