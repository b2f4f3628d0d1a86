#pragma once

#include <span>
#include <string>
#include <vector>

#include "sympkan/models/model.hpp"
#include "sympkan/systems/dataset.hpp"
#include "sympkan/systems/integrate.hpp"

namespace sympkan::eval {

struct ScalarStat {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

ScalarStat stat_of(std::span<const double> xs);

// `samples` points from t0 to t1 inclusive; samples == 1 gives {t0}.
std::vector<double> linspace(double t0, double t1, int samples);

struct RolloutOptions {
  double atol = 1e-9;
  double rtol = 1e-9;
  double max_norm = 1e6;       // blow-up cutoff; the rollout truncates here
  std::size_t max_evals = 20'000'000;
};

// A field integrated from one initial state. `states` holds only the sample
// times that were reached; `true_energy` is the benchmark Hamiltonian at
// each of them (NaN where the state is singular). A truncated integration
// sets `diverged` instead of throwing.
struct Rollout {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  std::vector<double> true_energy;
  bool diverged = false;
  std::string reason;
};

// Integrates the model's field (symplectic for Hamiltonian models, direct
// output for the baseline) and tracks the benchmark energy along the way.
Rollout rollout_model(const models::Model& m, const systems::SystemSpec& spec,
                      std::span<const double> z0,
                      std::span<const double> times,
                      const RolloutOptions& opts = {});

// Same bookkeeping along the benchmark's own field.
Rollout rollout_true(const systems::SystemSpec& spec,
                     std::span<const double> z0,
                     std::span<const double> times,
                     const RolloutOptions& opts = {});

// Time-averaged squared deviation of the benchmark energy from its starting
// value along a rollout, per initial condition. Rollouts truncate at
// blow-up and contribute their completed portion; an initial condition with
// fewer than two usable samples is dropped and counted in `dropped`. Every
// initial condition dropped -> DivergenceError.
struct DriftResult {
  ScalarStat drift;
  std::vector<double> per_initial;  // usable initial conditions, input order
  std::size_t dropped = 0;
};

DriftResult energy_drift_model(const models::Model& m,
                               const systems::SystemSpec& spec,
                               std::span<const std::vector<double>> initials,
                               std::span<const double> times,
                               const RolloutOptions& opts = {});

DriftResult energy_drift_true(const systems::SystemSpec& spec,
                              std::span<const std::vector<double>> initials,
                              std::span<const double> times,
                              const RolloutOptions& opts = {});

// Mean squared field mismatch per trajectory; mean and std across
// trajectories. Empty input -> UsageError.
struct MseResult {
  ScalarStat mse;
  std::vector<double> per_trajectory;
};

MseResult derivative_mse(const models::Model& m,
                         const std::vector<systems::Trajectory>& trajs);

}  // namespace sympkan::eval
