#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sympkan/errors.hpp"
#include "sympkan/eval/metrics.hpp"
#include "sympkan/eval/reproduce.hpp"
#include "sympkan/models/model.hpp"
#include "sympkan/presets.hpp"
#include "sympkan/systems/dataset.hpp"
#include "sympkan/train/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sympkan;

namespace {

std::uint64_t default_seed() {
  const char* s = std::getenv("SYMPKAN_SEED");
  if (!s || !*s) return 0;
  std::uint64_t v = 0;
  const char* end = s + std::string_view(s).size();
  const auto res = std::from_chars(s, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw UsageError("SYMPKAN_SEED is not an unsigned integer: " +
                     std::string(s));
  return v;
}

std::string preset_list() {
  std::string out;
  for (const auto& n : preset_names()) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

json stat_json(const eval::ScalarStat& s) {
  return {{"mean", s.mean}, {"std", s.std}};
}

// Field mismatch of the exact field against the (noisy) observations,
// trajectory by trajectory; the reference point for the learned models.
eval::MseResult true_field_mse(const systems::SystemSpec& spec,
                               const std::vector<systems::Trajectory>& trajs) {
  if (trajs.empty()) throw UsageError("no trajectories to evaluate");
  eval::MseResult out;
  std::vector<double> f(static_cast<std::size_t>(spec.dim()));
  for (const auto& traj : trajs) {
    double sum = 0.0;
    for (std::size_t i = 0; i < traj.samples(); ++i) {
      const auto z = traj.state(i);
      const auto dz = traj.derivative(i);
      systems::true_vector_field(spec, z, f);
      for (std::size_t k = 0; k < f.size(); ++k)
        sum += (dz[k] - f[k]) * (dz[k] - f[k]);
    }
    out.per_trajectory.push_back(sum / static_cast<double>(traj.samples()));
  }
  out.mse = eval::stat_of(out.per_trajectory);
  return out;
}

struct GenerateArgs {
  std::string preset;
  std::string out;
  std::uint64_t seed = 0;
  int n_train = -1, n_test = -1, samples = -1;
  double t_end = -1.0, sigma2 = -1.0;
  bool clean = false;
};

int cmd_generate(const GenerateArgs& a) {
  const auto& p = preset_by_name(a.preset);
  systems::DatasetConfig cfg = p.dataset;
  cfg.seed = a.seed;
  if (a.n_train >= 0) cfg.n_train = a.n_train;
  if (a.n_test >= 0) cfg.n_test = a.n_test;
  if (a.samples >= 0) cfg.samples = a.samples;
  if (a.t_end >= 0.0) cfg.t_end = a.t_end;
  if (a.sigma2 >= 0.0) cfg.sigma2 = a.sigma2;
  if (a.clean) cfg.sigma2 = 0.0;

  const auto ds = systems::build_dataset(cfg);
  fs::create_directories(a.out);
  systems::save_dataset(ds, a.out, p.name);
  json out = {{"preset", p.name},
              {"dir", a.out},
              {"prefix", p.name},
              {"n_train", cfg.n_train},
              {"n_test", cfg.n_test},
              {"samples", cfg.samples},
              {"t_end", cfg.t_end},
              {"sigma2", cfg.sigma2},
              {"seed", cfg.seed}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string preset;
  std::string model;
  std::string out;
  std::string history;
  std::uint64_t seed = 0;
  int steps = -1, batch = -1;
  std::string optimizer;
  double lr = -1.0, weight_decay = -1.0;
};

int cmd_train(const TrainArgs& a) {
  const auto& p = preset_by_name(a.preset);
  const auto kind = models::kind_from_name(a.model);
  const auto ds = systems::load_dataset(a.data, p.name);
  const auto train_pool = train::pool_samples(ds.train);
  const auto test_pool = train::pool_samples(ds.test);

  models::Model model = make_preset_model(p, kind, a.seed);
  train::TrainConfig cfg = preset_train_config(p, kind);
  cfg.seed = a.seed;
  if (a.steps >= 0) cfg.steps = a.steps;
  if (a.batch >= 0) cfg.batch_size = a.batch;
  if (!a.optimizer.empty()) cfg.optimizer = a.optimizer;
  if (a.lr >= 0.0) cfg.adam.lr = a.lr;
  if (a.weight_decay >= 0.0) cfg.adam.weight_decay = a.weight_decay;

  const fs::path out_path(a.out);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  cfg.checkpoint_path = a.out + ".ckpt";

  std::cerr << "training " << a.model << " on " << p.name << ": " << cfg.steps
            << " " << cfg.optimizer << " steps, batch " << cfg.batch_size
            << ", " << train_pool.size() << " samples\n";
  const auto hist = train::train(model, train_pool, test_pool, cfg);
  models::save_model(model, out_path);
  std::error_code ec;
  fs::remove(cfg.checkpoint_path, ec);

  if (!a.history.empty()) {
    std::string text = "step,loss,grad_norm,ms\n";
    for (std::size_t i = 0; i < hist.loss.size(); ++i)
      text += std::to_string(i + 1) + "," + std::to_string(hist.loss[i]) +
              "," + std::to_string(hist.grad_norm[i]) + "," +
              std::to_string(hist.ms[i]) + "\n";
    std::ofstream h(a.history, std::ios::trunc);
    if (!h) throw IoError("cannot write " + a.history);
    h << text;
  }

  json out = {{"model", a.model},
              {"file", a.out},
              {"parameters", models::model_params(model).size()},
              {"steps", cfg.steps},
              {"final_train_loss", hist.final_train_loss},
              {"final_test_loss", hist.final_test_loss}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct EvalArgs {
  std::string data;
  std::string preset;
  std::string model;
  int drift_initials = 25;
  double horizon = -1.0;
  int rollout_samples = -1;
  bool no_drift = false;
};

int cmd_eval(const EvalArgs& a) {
  const auto& p = preset_by_name(a.preset);
  const auto ds = systems::load_dataset(a.data, p.name);
  const auto& spec = p.dataset.system;
  const double horizon = a.horizon > 0.0 ? a.horizon : p.rollout_horizon;
  const int samples =
      a.rollout_samples > 0 ? a.rollout_samples : p.rollout_samples;

  json out = {{"preset", p.name},
              {"model", a.model},
              {"scale_exponent", p.scale_exponent}};

  std::vector<std::vector<double>> ics;
  const std::size_t n_ics = std::min<std::size_t>(
      ds.test.size(), a.drift_initials > 0
                          ? static_cast<std::size_t>(a.drift_initials)
                          : ds.test.size());
  for (std::size_t i = 0; i < n_ics; ++i) ics.push_back(ds.test[i].state(0));
  const auto times = eval::linspace(0.0, horizon, samples);

  if (a.model == "true") {
    out["train"] = stat_json(true_field_mse(spec, ds.train).mse);
    out["test"] = stat_json(true_field_mse(spec, ds.test).mse);
    if (!a.no_drift) {
      const auto drift = eval::energy_drift_true(spec, ics, times);
      out["energy"] = stat_json(drift.drift);
      out["energy"]["dropped_rollouts"] = drift.dropped;
    }
  } else {
    const auto model = models::load_model(a.model);
    if (models::model_input_dim(model) != spec.dim())
      throw ShapeError("model expects dimension " +
                       std::to_string(models::model_input_dim(model)) +
                       " but preset " + p.name + " has dimension " +
                       std::to_string(spec.dim()));
    out["train"] = stat_json(eval::derivative_mse(model, ds.train).mse);
    out["test"] = stat_json(eval::derivative_mse(model, ds.test).mse);
    if (!a.no_drift) {
      const auto drift = eval::energy_drift_model(model, spec, ics, times);
      out["energy"] = stat_json(drift.drift);
      out["energy"]["dropped_rollouts"] = drift.dropped;
    }
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct ReproduceArgs {
  std::string preset;
  std::string out;
  std::uint64_t seed = 0;
  int repeats = 1;
  double trajectory_scale = 1.0;
  double step_scale = 1.0;
  double kar_step_scale = -1.0;
  int drift_initials = 0;
  bool fresh = false;
  bool quiet = false;
};

int cmd_reproduce(const ReproduceArgs& a) {
  eval::ReproduceOptions opts;
  opts.out_dir = a.out;
  opts.seed = a.seed;
  opts.n_repeats = a.repeats;
  opts.trajectory_scale = a.trajectory_scale;
  opts.step_scale = a.step_scale;
  opts.kar_step_scale = a.kar_step_scale;
  opts.drift_initials = a.drift_initials;
  opts.resume = !a.fresh;
  opts.quiet = a.quiet;
  const auto report = eval::reproduce_table(preset_by_name(a.preset), opts);

  std::ifstream csv(report.report_csv);
  std::cout << csv.rdbuf();
  std::cerr << "summary: " << report.summary_json.string() << "\n";
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Hamiltonian learning benchmarks: datasets, training, metrics"};
  app.require_subcommand(1);
  const std::uint64_t env_seed = default_seed();

  GenerateArgs gen;
  gen.seed = env_seed;
  auto* g = app.add_subcommand("generate",
                               "Build and save a benchmark dataset");
  g->add_option("--preset", gen.preset, "one of: " + preset_list())
      ->required();
  g->add_option("--out", gen.out, "output directory")->required();
  g->add_option("--seed", gen.seed, "rng seed (default: SYMPKAN_SEED or 0)");
  g->add_option("--train-trajectories", gen.n_train);
  g->add_option("--test-trajectories", gen.n_test);
  g->add_option("--samples", gen.samples, "samples per trajectory");
  g->add_option("--t-end", gen.t_end, "trajectory span");
  g->add_option("--sigma2", gen.sigma2, "observation noise variance");
  g->add_flag("--clean", gen.clean, "no observation noise");

  TrainArgs tr;
  tr.seed = env_seed;
  auto* t = app.add_subcommand("train", "Train one model on a saved dataset");
  t->add_option("--data", tr.data, "dataset directory")->required();
  t->add_option("--preset", tr.preset, "one of: " + preset_list())
      ->required();
  t->add_option("--model", tr.model, "baseline | mlp_hnn | kar_hnn")
      ->required();
  t->add_option("--out", tr.out, "model file to write")->required();
  t->add_option("--seed", tr.seed, "rng seed (default: SYMPKAN_SEED or 0)");
  t->add_option("--steps", tr.steps, "optimizer steps");
  t->add_option("--batch", tr.batch, "minibatch size");
  t->add_option("--optimizer", tr.optimizer, "adam | lbfgs");
  t->add_option("--lr", tr.lr, "adam learning rate");
  t->add_option("--weight-decay", tr.weight_decay, "adam weight decay");
  t->add_option("--history", tr.history, "write per-step loss CSV here");

  EvalArgs ev;
  auto* e = app.add_subcommand(
      "eval", "Derivative MSE and energy drift of a saved model");
  e->add_option("--data", ev.data, "dataset directory")->required();
  e->add_option("--preset", ev.preset, "one of: " + preset_list())
      ->required();
  e->add_option("--model", ev.model, "model file, or 'true' for the exact field")
      ->required();
  e->add_option("--drift-initials", ev.drift_initials,
                "test rollouts for the energy metric (0 = all)");
  e->add_option("--horizon", ev.horizon, "rollout span");
  e->add_option("--rollout-samples", ev.rollout_samples);
  e->add_flag("--no-drift", ev.no_drift, "skip the rollout metric");

  ReproduceArgs rp;
  rp.seed = env_seed;
  auto* r = app.add_subcommand(
      "reproduce", "Full benchmark table: dataset, three models, metrics");
  r->add_option("--preset", rp.preset, "one of: " + preset_list())
      ->required();
  r->add_option("--out", rp.out, "working directory")->required();
  r->add_option("--seed", rp.seed, "rng seed (default: SYMPKAN_SEED or 0)");
  r->add_option("--repeats", rp.repeats, "independently seeded runs per model");
  r->add_option("--trajectory-scale", rp.trajectory_scale,
                "shrink or grow the dataset");
  r->add_option("--step-scale", rp.step_scale, "shrink or grow training");
  r->add_option("--kar-step-scale", rp.kar_step_scale,
                "separate step scale for the spline model (default: same)");
  r->add_option("--drift-initials", rp.drift_initials,
                "test rollouts for the energy metric (0 = all)");
  r->add_flag("--fresh", rp.fresh, "retrain even when saved models exist");
  r->add_flag("--quiet", rp.quiet, "no progress lines");

  auto* pr = app.add_subcommand("presets", "Print every preset as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 2;
  }

  if (g->parsed()) return cmd_generate(gen);
  if (t->parsed()) return cmd_train(tr);
  if (e->parsed()) return cmd_eval(ev);
  if (r->parsed()) return cmd_reproduce(rp);
  if (pr->parsed()) {
    std::cout << dump_presets_json() << "\n";
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ModelKindError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected failure: " << e.what() << "\n";
    return 1;
  }
}
