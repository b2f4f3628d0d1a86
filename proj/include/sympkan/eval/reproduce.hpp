#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sympkan/eval/metrics.hpp"
#include "sympkan/models/model.hpp"
#include "sympkan/presets.hpp"

namespace sympkan::eval {

// Published reference numbers for one model family, already on the preset's
// reporting scale (value * 10^scale_exponent).
struct ReferenceRow {
  double train = 0.0, train_std = 0.0;
  double test = 0.0, test_std = 0.0;
  double energy = 0.0, energy_std = 0.0;
};

struct ReferenceTable {
  ReferenceRow baseline, hnn, kar;
};

const ReferenceTable& reference_results(std::string_view preset);

struct ReproduceOptions {
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  int n_repeats = 1;             // independently seeded runs per family
  double trajectory_scale = 1.0; // multiplies n_train and n_test
  double step_scale = 1.0;       // multiplies optimizer steps
  double kar_step_scale = -1.0;  // overrides step_scale for kar; <0 = same
  int drift_initials = 0;        // test rollouts for the energy metric; 0 = all
  bool resume = true;            // reuse saved datasets and models
  bool quiet = false;
};

// Raw (unscaled) metrics for one family. With several repeats the spread is
// across seeds; with one repeat it falls back to the spread across test
// trajectories (and rollout initial conditions for the energy metric).
struct FamilyMetrics {
  models::ModelKind kind = models::ModelKind::kBaseline;
  ScalarStat train_mse, test_mse, drift;
  std::vector<double> train_runs, test_runs, drift_runs;  // per repeat
  std::string spread;  // "seeds" | "trajectories"
  std::size_t dropped_rollouts = 0;
};

struct ReproduceReport {
  std::string preset;
  int scale_exponent = 3;
  std::vector<FamilyMetrics> rows;  // baseline, hnn, kar
  std::filesystem::path report_csv;
  std::filesystem::path summary_json;
};

// Runs the full benchmark for one preset: dataset, three trained model
// families, derivative MSE on the train and test splits, and the energy
// metric over long rollouts from test initial conditions. Writes the report
// CSV (values on the preset's 10^scale_exponent scale), a JSON summary with
// the reference numbers alongside, per-run training histories, saved models,
// and plot-ready energy/trajectory CSVs. With `resume` set, saved datasets
// and models are reused so an interrupted run picks up where it stopped.
ReproduceReport reproduce_table(const ExperimentPreset& p,
                                const ReproduceOptions& opts);

}  // namespace sympkan::eval
