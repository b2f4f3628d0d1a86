#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sympkan/systems/system.hpp"

namespace sympkan::systems {

// Writes dz/dt into the last argument.
using FieldFn =
    std::function<void(double t, std::span<const double> z, std::span<double> dz)>;

FieldFn field_of(const SystemSpec& spec);

struct Rk45Options {
  double atol = 1e-10;
  double rtol = 1e-10;
  double max_norm = 0.0;        // stop once any |z_i| exceeds this; 0 = unlimited
  std::size_t max_evals = 20'000'000;
};

// States at the requested times (times[0] is the initial time, strictly
// increasing). `completed` counts how many of them were reached; on early
// stop `diverged` is set and `reason`/`last_time` say why and where.
struct IntegrationResult {
  std::vector<std::vector<double>> states;
  std::size_t completed = 0;
  bool diverged = false;
  double last_time = 0.0;
  std::string reason;
};

// Adaptive fifth-order step with embedded fourth-order error control.
// Never throws on blow-up; inspect `diverged`.
IntegrationResult integrate_rk45_partial(const FieldFn& field,
                                         std::span<const double> z0,
                                         std::span<const double> times,
                                         const Rk45Options& opts = {});

// Same, but an incomplete integration is an error.
std::vector<std::vector<double>> integrate_rk45(const FieldFn& field,
                                                std::span<const double> z0,
                                                std::span<const double> times,
                                                const Rk45Options& opts = {});

// Classic fixed-step fourth-order scheme; each sample interval is cut into
// steps no longer than dt_max.
std::vector<std::vector<double>> integrate_rk4(const FieldFn& field,
                                               std::span<const double> z0,
                                               std::span<const double> times,
                                               double dt_max);

// Kick-drift-kick scheme for the separable benchmarks; symplectic, so the
// energy error stays bounded instead of drifting.
std::vector<std::vector<double>> leapfrog(const SystemSpec& spec,
                                          std::span<const double> z0,
                                          std::span<const double> times,
                                          double dt_max);

}  // namespace sympkan::systems
