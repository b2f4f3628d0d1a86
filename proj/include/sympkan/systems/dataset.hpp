#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sympkan/rng.hpp"
#include "sympkan/systems/system.hpp"

namespace sympkan::systems {

// One observed trajectory: times, states, ground-truth derivatives, and the
// clean energies. Noise, when added, touches states and derivatives only.
struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> q, p;    // samples x dof
  std::vector<std::vector<double>> dq, dp;  // samples x dof
  std::vector<double> energies;             // clean H along the samples

  std::size_t samples() const { return times.size(); }
  std::vector<double> state(std::size_t i) const;       // [q; p]
  std::vector<double> derivative(std::size_t i) const;  // [dq; dp]
};

struct DatasetConfig {
  SystemSpec system;
  int n_train = 0;
  int n_test = 0;
  int samples = 2;
  double t_end = 1.0;
  double sigma2 = 0.0;  // variance of the additive Gaussian noise
  std::uint64_t seed = 0;
};

struct Dataset {
  DatasetConfig config;
  std::vector<Trajectory> train;
  std::vector<Trajectory> test;
};

// A random state satisfying the per-system sampling rule (energy band for
// the one-dof systems, perturbed circular orbits for the n-body ones).
std::vector<double> sample_initial_conditions(const SystemSpec& spec, Rng& rng);

// Adds Normal(0, sigma2) independently to every state and derivative
// component. Times and the clean energies stay untouched.
void add_noise(Trajectory& traj, double sigma2, Rng& rng);

// Integrates one clean trajectory over `samples` points spanning [0, t_end]
// and fills the analytic derivatives and energies at the samples.
Trajectory generate_trajectory(const SystemSpec& spec,
                               std::span<const double> z0, int samples,
                               double t_end);

// All trajectories for a preset: one child seed per trajectory, noise drawn
// from the same child stream, train and test disjoint by construction.
Dataset build_dataset(const DatasetConfig& config);

// JSON-lines files (one trajectory per line) plus a metadata sidecar:
// <prefix>_train.jsonl, <prefix>_test.jsonl, <prefix>_meta.json.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir,
                  const std::string& prefix);
Dataset load_dataset(const std::filesystem::path& dir,
                     const std::string& prefix);

}  // namespace sympkan::systems
