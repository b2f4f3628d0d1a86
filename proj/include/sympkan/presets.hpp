#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sympkan/models/kar.hpp"
#include "sympkan/models/model.hpp"
#include "sympkan/systems/dataset.hpp"
#include "sympkan/train/trainer.hpp"

namespace sympkan {

// Everything needed to run one benchmark experiment end to end: dataset
// rules, a training recipe per model family, and the evaluation scales.
// All values resolve offline; dump_presets_json exposes them for inspection.
struct ExperimentPreset {
  std::string name;  // spring | pendulum | two_body | three_body
  systems::DatasetConfig dataset;

  std::vector<int> mlp_hidden;         // hidden widths for baseline and hnn
  models::KarOptions kar;

  train::TrainConfig baseline_train;
  train::TrainConfig hnn_train;
  train::TrainConfig kar_train;

  int scale_exponent = 3;   // metric tables report value * 10^scale_exponent
  double rollout_horizon = 20.0;
  int rollout_samples = 200;
};

const std::vector<ExperimentPreset>& presets();
const ExperimentPreset& preset_by_name(std::string_view name);
std::vector<std::string> preset_names();
std::string dump_presets_json();

// Fresh model of the given family shaped for this preset's system.
models::Model make_preset_model(const ExperimentPreset& p,
                                models::ModelKind kind, std::uint64_t seed);

// Training recipe for the given family (steps, batch, optimizer settings).
const train::TrainConfig& preset_train_config(const ExperimentPreset& p,
                                              models::ModelKind kind);

}  // namespace sympkan
