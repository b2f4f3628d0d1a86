#include "sympkan/presets.hpp"

#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "sympkan/errors.hpp"

namespace sympkan {

namespace {

train::TrainConfig adam_recipe(int steps, int batch) {
  train::TrainConfig cfg;
  cfg.optimizer = "adam";
  cfg.adam.lr = 1e-3;
  cfg.adam.weight_decay = 1e-4;
  cfg.steps = steps;
  cfg.batch_size = batch;
  return cfg;
}

train::TrainConfig lbfgs_recipe(int steps, int batch) {
  train::TrainConfig cfg;
  cfg.optimizer = "lbfgs";
  cfg.steps = steps;
  cfg.batch_size = batch;
  return cfg;
}

std::vector<ExperimentPreset> build_presets() {
  std::vector<ExperimentPreset> out;

  // one nominal period of the unit-separation circular two-body orbit, and
  // of the unit-radius triangular three-body configuration
  const double two_body_period = 2.0 * std::numbers::pi / std::sqrt(2.0);
  const double three_body_period =
      2.0 * std::numbers::pi * std::sqrt(std::sqrt(3.0));

  {
    ExperimentPreset p;
    p.name = "spring";
    p.dataset.system = systems::SystemSpec::spring_mass();
    p.dataset.n_train = 25;
    p.dataset.n_test = 25;
    p.dataset.samples = 30;
    p.dataset.t_end = 3.0;
    p.dataset.sigma2 = 0.1;
    p.mlp_hidden = {200, 200};
    p.kar.widths = {2, 2, 1};
    p.kar.grid_intervals = 2;
    p.kar.degree = 5;
    p.kar.input_domains = {2.5, 2.5};
    p.kar.hidden_halfwidth = 3.0;
    p.baseline_train = adam_recipe(2000, 128);
    p.hnn_train = adam_recipe(2000, 128);
    p.kar_train = lbfgs_recipe(200, 50);
    p.scale_exponent = 3;
    p.rollout_horizon = 20.0;
    p.rollout_samples = 200;
    out.push_back(std::move(p));
  }

  {
    ExperimentPreset p;
    p.name = "pendulum";
    p.dataset.system = systems::SystemSpec::pendulum();
    p.dataset.n_train = 25;
    p.dataset.n_test = 25;
    p.dataset.samples = 45;
    p.dataset.t_end = 3.0;
    p.dataset.sigma2 = 0.1;
    p.mlp_hidden = {200, 200};
    p.kar.widths = {2, 2, 1};
    p.kar.grid_intervals = 2;
    p.kar.degree = 3;
    p.kar.input_domains = {3.5, 3.5};
    p.kar.hidden_halfwidth = 3.0;
    p.baseline_train = adam_recipe(2000, 128);
    p.hnn_train = adam_recipe(2000, 128);
    p.kar_train = lbfgs_recipe(200, 50);
    p.scale_exponent = 3;
    p.rollout_horizon = 20.0;
    p.rollout_samples = 200;
    out.push_back(std::move(p));
  }

  {
    ExperimentPreset p;
    p.name = "two_body";
    p.dataset.system = systems::SystemSpec::two_body();
    p.dataset.n_train = 800;
    p.dataset.n_test = 200;
    p.dataset.samples = 50;
    p.dataset.t_end = two_body_period;
    p.dataset.sigma2 = 0.05;
    p.mlp_hidden = {200, 200};
    p.kar.widths = {8, 10, 10, 1};
    p.kar.grid_intervals = 3;
    p.kar.degree = 3;
    p.kar.input_domains = {3.5, 3.5, 3.5, 3.5, 2.0, 2.0, 2.0, 2.0};
    p.kar.hidden_halfwidth = 5.0;
    p.baseline_train = adam_recipe(10000, 512);
    p.hnn_train = adam_recipe(10000, 512);
    p.kar_train = lbfgs_recipe(4000, 50);
    p.scale_exponent = 6;
    p.rollout_horizon = 3.0 * two_body_period;
    p.rollout_samples = 200;
    out.push_back(std::move(p));
  }

  {
    ExperimentPreset p;
    p.name = "three_body";
    p.dataset.system = systems::SystemSpec::three_body();
    p.dataset.n_train = 4000;
    p.dataset.n_test = 1000;
    p.dataset.samples = 20;
    p.dataset.t_end = 2.0;
    p.dataset.sigma2 = 0.2;
    p.mlp_hidden = {200, 200};
    p.kar.widths = {12, 15, 10, 1};
    p.kar.grid_intervals = 2;
    p.kar.degree = 3;
    p.kar.input_domains = {4.0, 4.0, 4.0, 4.0, 4.0, 4.0,
                           2.5, 2.5, 2.5, 2.5, 2.5, 2.5};
    p.kar.hidden_halfwidth = 5.0;
    p.baseline_train = adam_recipe(10000, 600);
    p.hnn_train = adam_recipe(10000, 600);
    p.kar_train = lbfgs_recipe(200, 50);
    p.scale_exponent = 3;
    p.rollout_horizon = 3.0 * three_body_period;
    p.rollout_samples = 200;
    out.push_back(std::move(p));
  }

  return out;
}

}  // namespace

const std::vector<ExperimentPreset>& presets() {
  static const std::vector<ExperimentPreset> table = build_presets();
  return table;
}

const ExperimentPreset& preset_by_name(std::string_view name) {
  for (const auto& p : presets())
    if (p.name == name) return p;
  std::string known;
  for (const auto& p : presets()) {
    if (!known.empty()) known += ", ";
    known += p.name;
  }
  throw UsageError("unknown preset '" + std::string(name) + "' (known: " +
                   known + ")");
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& p : presets()) names.push_back(p.name);
  return names;
}

std::string dump_presets_json() {
  nlohmann::json root;
  for (const auto& p : presets()) {
    nlohmann::json j;
    j["dataset"] = {{"system", p.dataset.system.name},
                    {"n_train", p.dataset.n_train},
                    {"n_test", p.dataset.n_test},
                    {"samples", p.dataset.samples},
                    {"t_end", p.dataset.t_end},
                    {"sigma2", p.dataset.sigma2}};
    j["mlp_hidden"] = p.mlp_hidden;
    j["kar"] = {{"widths", p.kar.widths},
                {"grid_intervals", p.kar.grid_intervals},
                {"degree", p.kar.degree},
                {"input_domains", p.kar.input_domains},
                {"hidden_halfwidth", p.kar.hidden_halfwidth}};
    auto recipe = [](const train::TrainConfig& c) {
      nlohmann::json r = {{"optimizer", c.optimizer},
                          {"steps", c.steps},
                          {"batch_size", c.batch_size}};
      if (c.optimizer == "adam") {
        r["lr"] = c.adam.lr;
        r["weight_decay"] = c.adam.weight_decay;
      } else {
        r["memory"] = c.lbfgs.memory;
      }
      return r;
    };
    j["train"] = {{"baseline", recipe(p.baseline_train)},
                  {"hnn", recipe(p.hnn_train)},
                  {"kar", recipe(p.kar_train)}};
    j["scale_exponent"] = p.scale_exponent;
    j["rollout_horizon"] = p.rollout_horizon;
    j["rollout_samples"] = p.rollout_samples;
    root[p.name] = std::move(j);
  }
  return root.dump(2);
}

models::Model make_preset_model(const ExperimentPreset& p,
                                models::ModelKind kind, std::uint64_t seed) {
  const int dim = p.dataset.system.dim();
  std::vector<int> widths;
  widths.push_back(dim);
  widths.insert(widths.end(), p.mlp_hidden.begin(), p.mlp_hidden.end());
  switch (kind) {
    case models::ModelKind::kBaseline:
      widths.push_back(dim);
      return models::BaselineNet(widths, seed);
    case models::ModelKind::kMlpHnn:
      widths.push_back(1);
      return models::MlpHamiltonian(widths, seed);
    case models::ModelKind::kKarHnn:
      return models::KarHamiltonian(p.kar, seed);
  }
  throw UsageError("unknown model kind");
}

const train::TrainConfig& preset_train_config(const ExperimentPreset& p,
                                              models::ModelKind kind) {
  switch (kind) {
    case models::ModelKind::kBaseline:
      return p.baseline_train;
    case models::ModelKind::kMlpHnn:
      return p.hnn_train;
    case models::ModelKind::kKarHnn:
      return p.kar_train;
  }
  throw UsageError("unknown model kind");
}

}  // namespace sympkan
