#include "sympkan/eval/metrics.hpp"

#include <cmath>
#include <cstddef>

#include "sympkan/ad/tape.hpp"
#include "sympkan/errors.hpp"
#include "sympkan/train/loss.hpp"

namespace sympkan::eval {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double true_energy_or_nan(const systems::SystemSpec& spec,
                          std::span<const double> z) {
  try {
    const double h = systems::hamiltonian(spec, z);
    return std::isfinite(h) ? h : kNan;
  } catch (const SingularityError&) {
    return kNan;
  }
}

Rollout run_rollout(const systems::FieldFn& field,
                    const systems::SystemSpec& spec,
                    std::span<const double> z0,
                    std::span<const double> times,
                    const RolloutOptions& opts) {
  systems::Rk45Options ro;
  ro.atol = opts.atol;
  ro.rtol = opts.rtol;
  ro.max_norm = opts.max_norm;
  ro.max_evals = opts.max_evals;
  auto res = systems::integrate_rk45_partial(field, z0, times, ro);

  Rollout out;
  out.times.assign(times.begin(), times.begin() + res.completed);
  out.states = std::move(res.states);
  out.diverged = res.diverged;
  out.reason = std::move(res.reason);
  out.true_energy.reserve(out.states.size());
  for (const auto& z : out.states)
    out.true_energy.push_back(true_energy_or_nan(spec, z));
  return out;
}

DriftResult drift_over(std::span<const std::vector<double>> initials,
                       std::span<const double> times,
                       const std::function<Rollout(std::span<const double>)>& roll) {
  if (initials.empty())
    throw UsageError("energy_drift: no initial conditions");
  if (times.size() < 2)
    throw UsageError("energy_drift: need at least two sample times");

  DriftResult out;
  out.per_initial.reserve(initials.size());
  for (const auto& z0 : initials) {
    const Rollout r = roll(z0);
    // Average over the samples the rollout reached with a finite energy;
    // a truncated trajectory still contributes its completed portion.
    const double h0 = r.true_energy.empty() ? kNan : r.true_energy[0];
    if (!std::isfinite(h0)) {
      ++out.dropped;
      continue;
    }
    double sum = 0.0;
    std::size_t usable = 0;
    for (const double h : r.true_energy) {
      if (!std::isfinite(h)) continue;
      const double dev = h - h0;
      sum += dev * dev;
      ++usable;
    }
    if (usable < 2) {
      ++out.dropped;
      continue;
    }
    out.per_initial.push_back(sum / static_cast<double>(usable));
  }
  if (out.per_initial.empty())
    throw DivergenceError("energy_drift: every rollout diverged immediately");
  out.drift = stat_of(out.per_initial);
  return out;
}

}  // namespace

ScalarStat stat_of(std::span<const double> xs) {
  if (xs.empty()) throw UsageError("stat_of: empty input");
  double sum = 0.0;
  for (const double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (const double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size()))};
}

std::vector<double> linspace(double t0, double t1, int samples) {
  if (samples < 1) throw UsageError("linspace: need at least one sample");
  std::vector<double> ts(static_cast<std::size_t>(samples));
  if (samples == 1) {
    ts[0] = t0;
    return ts;
  }
  const double dt = (t1 - t0) / static_cast<double>(samples - 1);
  for (int i = 0; i < samples; ++i) ts[static_cast<std::size_t>(i)] = t0 + dt * i;
  ts.back() = t1;
  return ts;
}

Rollout rollout_model(const models::Model& m, const systems::SystemSpec& spec,
                      std::span<const double> z0,
                      std::span<const double> times,
                      const RolloutOptions& opts) {
  if (static_cast<int>(z0.size()) != models::model_input_dim(m))
    throw ShapeError("rollout_model: state size does not match the model");
  ad::Tape tape(&models::model_params(m));
  tape.set_recording(false);
  systems::FieldFn field = [&m, &tape](double, std::span<const double> z,
                                       std::span<double> dz) {
    models::field_values(m, tape, z, dz);
  };
  return run_rollout(field, spec, z0, times, opts);
}

Rollout rollout_true(const systems::SystemSpec& spec,
                     std::span<const double> z0,
                     std::span<const double> times,
                     const RolloutOptions& opts) {
  return run_rollout(systems::field_of(spec), spec, z0, times, opts);
}

DriftResult energy_drift_model(const models::Model& m,
                               const systems::SystemSpec& spec,
                               std::span<const std::vector<double>> initials,
                               std::span<const double> times,
                               const RolloutOptions& opts) {
  return drift_over(initials, times, [&](std::span<const double> z0) {
    return rollout_model(m, spec, z0, times, opts);
  });
}

DriftResult energy_drift_true(const systems::SystemSpec& spec,
                              std::span<const std::vector<double>> initials,
                              std::span<const double> times,
                              const RolloutOptions& opts) {
  return drift_over(initials, times, [&](std::span<const double> z0) {
    return rollout_true(spec, z0, times, opts);
  });
}

MseResult derivative_mse(const models::Model& m,
                         const std::vector<systems::Trajectory>& trajs) {
  if (trajs.empty()) throw UsageError("derivative_mse: no trajectories");
  ad::Tape tape(&models::model_params(m));
  MseResult out;
  out.per_trajectory.reserve(trajs.size());
  std::vector<train::Sample> batch;
  for (const auto& traj : trajs) {
    batch.clear();
    batch.reserve(traj.samples());
    for (std::size_t i = 0; i < traj.samples(); ++i)
      batch.push_back({traj.state(i), traj.derivative(i)});
    out.per_trajectory.push_back(train::batch_loss_value(m, tape, batch));
  }
  out.mse = stat_of(out.per_trajectory);
  return out;
}

}  // namespace sympkan::eval
