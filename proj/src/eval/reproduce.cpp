#include "sympkan/eval/reproduce.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <optional>

#include <nlohmann/json.hpp>

#include "sympkan/errors.hpp"
#include "sympkan/rng.hpp"
#include "sympkan/train/trainer.hpp"

namespace sympkan::eval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr models::ModelKind kFamilies[] = {models::ModelKind::kBaseline,
                                           models::ModelKind::kMlpHnn,
                                           models::ModelKind::kKarHnn};

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc()) throw IoError("float formatting failed");
  return std::string(buf, res.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void note(const ReproduceOptions& opts, const char* fmt_str, ...)
    __attribute__((format(printf, 2, 3)));

void note(const ReproduceOptions& opts, const char* fmt_str, ...) {
  if (opts.quiet) return;
  va_list args;
  va_start(args, fmt_str);
  std::vfprintf(stderr, fmt_str, args);
  va_end(args);
  std::fputc('\n', stderr);
}

int scaled_count(int base, double factor) {
  return std::max(1, static_cast<int>(std::lround(base * factor)));
}

// Different scales produce incompatible saved models under the same
// directory, so the run configuration is pinned on first use.
void check_run_config(const ExperimentPreset& p, const ReproduceOptions& opts) {
  const fs::path path = opts.out_dir / "run_config.json";
  json want = {{"preset", p.name},
               {"seed", opts.seed},
               {"trajectory_scale", opts.trajectory_scale},
               {"step_scale", opts.step_scale},
               {"kar_step_scale", opts.kar_step_scale}};
  if (fs::exists(path)) {
    std::ifstream in(path);
    json have = json::parse(in, nullptr, true);
    if (have != want)
      throw UsageError("output directory " + opts.out_dir.string() +
                       " holds a run with a different configuration; use a "
                       "fresh directory or delete it");
    return;
  }
  write_text(path, want.dump(2));
}

systems::Dataset prepare_dataset(const ExperimentPreset& sp,
                                 const ReproduceOptions& opts) {
  const fs::path dir = opts.out_dir / "data";
  fs::create_directories(dir);
  const std::string prefix = sp.name;
  const bool have = fs::exists(dir / (prefix + "_train.jsonl")) &&
                    fs::exists(dir / (prefix + "_test.jsonl")) &&
                    fs::exists(dir / (prefix + "_meta.json"));
  if (opts.resume && have) {
    auto ds = systems::load_dataset(dir, prefix);
    const auto& c = ds.config;
    const auto& w = sp.dataset;
    if (c.system.name == w.system.name && c.n_train == w.n_train &&
        c.n_test == w.n_test && c.samples == w.samples &&
        c.t_end == w.t_end && c.sigma2 == w.sigma2 && c.seed == w.seed) {
      note(opts, "[%s] dataset: reusing %s", sp.name.c_str(),
           (dir / prefix).string().c_str());
      return ds;
    }
    note(opts, "[%s] dataset: saved files do not match, rebuilding",
         sp.name.c_str());
  }
  note(opts, "[%s] dataset: generating %d train + %d test trajectories",
       sp.name.c_str(), sp.dataset.n_train, sp.dataset.n_test);
  auto ds = systems::build_dataset(sp.dataset);
  systems::save_dataset(ds, dir, prefix);
  return ds;
}

void write_history_csv(const fs::path& path, const train::TrainHistory& h) {
  std::string text = "step,loss,grad_norm,ms\n";
  for (std::size_t i = 0; i < h.loss.size(); ++i) {
    text += std::to_string(i + 1);
    text += ',';
    text += fmt(h.loss[i]);
    text += ',';
    text += fmt(h.grad_norm[i]);
    text += ',';
    text += fmt(h.ms[i]);
    text += '\n';
  }
  write_text(path, text);
}

struct FamilyRun {
  FamilyMetrics metrics;
  std::optional<models::Model> first_model;  // repeat 0, kept for the plots
};

FamilyRun run_family(const ExperimentPreset& sp, models::ModelKind kind,
                     const systems::Dataset& ds,
                     const std::vector<train::Sample>& train_pool,
                     const std::vector<train::Sample>& test_pool,
                     std::span<const std::vector<double>> drift_ics,
                     std::span<const double> drift_times,
                     const ReproduceOptions& opts, std::size_t family_index) {
  FamilyRun run;
  auto& fm = run.metrics;
  fm.kind = kind;
  const char* kname = models::kind_name(kind);

  // Spreads for the single-repeat fallback come from the first repeat.
  ScalarStat first_train, first_test, first_drift;

  for (int r = 0; r < opts.n_repeats; ++r) {
    const Rng stream = Rng(opts.seed).child(2 + family_index).child(
        static_cast<std::uint64_t>(r));
    const fs::path model_path =
        opts.out_dir / "models" /
        (sp.name + "_" + kname + "_seed" + std::to_string(r) + ".khmf");

    models::Model model = [&] {
      if (opts.resume && fs::exists(model_path)) {
        note(opts, "[%s] %s seed %d: reusing %s", sp.name.c_str(), kname, r,
             model_path.string().c_str());
        return models::load_model(model_path);
      }
      auto fresh = make_preset_model(sp, kind, stream.child(0).seed());
      train::TrainConfig cfg = preset_train_config(sp, kind);
      const double sscale =
          kind == models::ModelKind::kKarHnn && opts.kar_step_scale >= 0.0
              ? opts.kar_step_scale
              : opts.step_scale;
      cfg.steps = scaled_count(cfg.steps, sscale);
      cfg.seed = stream.child(1).seed();
      cfg.checkpoint_path = model_path.string() + ".ckpt";
      note(opts, "[%s] %s seed %d: training %d %s steps, batch %d",
           sp.name.c_str(), kname, r, cfg.steps, cfg.optimizer.c_str(),
           cfg.batch_size);
      const auto t0 = std::chrono::steady_clock::now();
      const auto hist = train::train(fresh, train_pool, test_pool, cfg);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      note(opts, "[%s] %s seed %d: trained in %.1fs, final loss %g",
           sp.name.c_str(), kname, r, secs, hist.final_train_loss);
      models::save_model(fresh, model_path);
      write_history_csv(
          opts.out_dir / "models" /
              (sp.name + "_" + kname + "_seed" + std::to_string(r) +
               "_history.csv"),
          hist);
      std::error_code ec;
      fs::remove(cfg.checkpoint_path, ec);
      return fresh;
    }();

    const auto train_mse = derivative_mse(model, ds.train);
    const auto test_mse = derivative_mse(model, ds.test);
    const auto drift = energy_drift_model(model, sp.dataset.system, drift_ics,
                                          drift_times);
    fm.train_runs.push_back(train_mse.mse.mean);
    fm.test_runs.push_back(test_mse.mse.mean);
    fm.drift_runs.push_back(drift.drift.mean);
    fm.dropped_rollouts += drift.dropped;
    note(opts,
         "[%s] %s seed %d: train %.6g  test %.6g  energy %.6g  (%zu rollouts "
         "dropped)",
         sp.name.c_str(), kname, r, train_mse.mse.mean, test_mse.mse.mean,
         drift.drift.mean, drift.dropped);
    if (r == 0) {
      first_train = train_mse.mse;
      first_test = test_mse.mse;
      first_drift = drift.drift;
      run.first_model = std::move(model);
    }
  }

  if (opts.n_repeats > 1) {
    fm.spread = "seeds";
    fm.train_mse = stat_of(fm.train_runs);
    fm.test_mse = stat_of(fm.test_runs);
    fm.drift = stat_of(fm.drift_runs);
  } else {
    fm.spread = "trajectories";
    fm.train_mse = first_train;
    fm.test_mse = first_test;
    fm.drift = first_drift;
  }
  return run;
}

void write_energy_plot(const ExperimentPreset& p, const ReproduceOptions& opts,
                       std::span<const FamilyRun> runs,
                       std::span<const double> z0,
                       std::span<const double> times) {
  const auto& spec = p.dataset.system;
  const Rollout truth = rollout_true(spec, z0, times);
  std::vector<Rollout> model_rolls;
  for (const auto& run : runs)
    model_rolls.push_back(rollout_model(*run.first_model, spec, z0, times));

  std::string text = "t,true,baseline,hnn,kar\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    text += fmt(times[i]);
    text += ',';
    text += i < truth.true_energy.size() ? fmt(truth.true_energy[i]) : "nan";
    for (const auto& r : model_rolls) {
      text += ',';
      text += i < r.true_energy.size() ? fmt(r.true_energy[i]) : "nan";
    }
    text += '\n';
  }
  write_text(opts.out_dir / "plots" / (p.name + "_energy.csv"), text);
}

void write_trajectory_plot(const ExperimentPreset& p,
                           const ReproduceOptions& opts, const char* label,
                           const Rollout& roll, int dof) {
  std::string text = "t";
  for (int i = 0; i < dof; ++i) text += ",q" + std::to_string(i);
  for (int i = 0; i < dof; ++i) text += ",p" + std::to_string(i);
  text += '\n';
  for (std::size_t i = 0; i < roll.states.size(); ++i) {
    text += fmt(roll.times[i]);
    for (const double v : roll.states[i]) {
      text += ',';
      text += fmt(v);
    }
    text += '\n';
  }
  write_text(
      opts.out_dir / "plots" / (p.name + "_traj_" + label + ".csv"), text);
}

json row_json(const FamilyMetrics& fm, double scale) {
  return {{"train", fm.train_mse.mean * scale},
          {"train_std", fm.train_mse.std * scale},
          {"test", fm.test_mse.mean * scale},
          {"test_std", fm.test_mse.std * scale},
          {"energy", fm.drift.mean * scale},
          {"energy_std", fm.drift.std * scale},
          {"dropped_rollouts", fm.dropped_rollouts}};
}

json row_json(const ReferenceRow& r) {
  return {{"train", r.train},       {"train_std", r.train_std},
          {"test", r.test},         {"test_std", r.test_std},
          {"energy", r.energy},     {"energy_std", r.energy_std}};
}

}  // namespace

const ReferenceTable& reference_results(std::string_view preset) {
  // Reference results for the four benchmarks, on each preset's reporting
  // scale (10^3 for spring, pendulum, three_body; 10^6 for two_body).
  static const ReferenceTable spring = {
      {37.1, 1.91, 36.6, 1.86, 168.0, 20.5},
      {36.9, 1.91, 35.9, 1.83, 0.376, 0.0798},
      {35.2, 7.70, 28.6, 5.59, 1.63, 0.284}};
  static const ReferenceTable pendulum = {
      {31.3, 1.76, 38.0, 2.13, 41.2, 7.33},
      {31.7, 1.77, 38.5, 2.10, 28.8, 6.94},
      {32.8, 1.76, 34.3, 1.75, 24.6, 6.94}};
  static const ReferenceTable two_body = {
      {30.3, 1.24, 26.7, 0.786, 1.01e5, 2.50e4},
      {2.37, 0.166, 1.92, 3.97e-2, 4.99, 0.395},
      {0.216, 4.03e-2, 0.281, 4.73e-2, 1.56, 1.18}};
  static const ReferenceTable three_body = {
      {95.6, 65.6, 380.0, 416.0, 1.09e5, 7.72e4},
      {86.3, 21.7, 478.0, 450.0, 2.97, 0.743},
      {6.29, 2.49, 17.9, 13.8, 5.80, 1.54}};
  if (preset == "spring") return spring;
  if (preset == "pendulum") return pendulum;
  if (preset == "two_body") return two_body;
  if (preset == "three_body") return three_body;
  throw UsageError("no reference results for preset '" + std::string(preset) +
                   "'");
}

ReproduceReport reproduce_table(const ExperimentPreset& p,
                                const ReproduceOptions& opts) {
  if (opts.n_repeats < 1) throw UsageError("n_repeats must be positive");
  if (opts.trajectory_scale <= 0.0 || opts.step_scale <= 0.0)
    throw UsageError("scales must be positive");
  if (opts.drift_initials < 0)
    throw UsageError("drift_initials must be non-negative");

  fs::create_directories(opts.out_dir / "models");
  fs::create_directories(opts.out_dir / "plots");
  check_run_config(p, opts);

  ExperimentPreset sp = p;
  sp.dataset.n_train = scaled_count(p.dataset.n_train, opts.trajectory_scale);
  sp.dataset.n_test = scaled_count(p.dataset.n_test, opts.trajectory_scale);
  sp.dataset.seed = Rng(opts.seed).child(1).seed();

  const auto ds = prepare_dataset(sp, opts);
  const auto train_pool = train::pool_samples(ds.train);
  const auto test_pool = train::pool_samples(ds.test);

  std::vector<std::vector<double>> drift_ics;
  const std::size_t n_ics =
      opts.drift_initials > 0
          ? std::min<std::size_t>(ds.test.size(),
                                  static_cast<std::size_t>(opts.drift_initials))
          : ds.test.size();
  drift_ics.reserve(n_ics);
  for (std::size_t i = 0; i < n_ics; ++i) drift_ics.push_back(ds.test[i].state(0));
  const auto drift_times = linspace(0.0, p.rollout_horizon, p.rollout_samples);

  ReproduceReport report;
  report.preset = p.name;
  report.scale_exponent = p.scale_exponent;

  std::vector<FamilyRun> runs;
  for (std::size_t f = 0; f < 3; ++f) {
    runs.push_back(run_family(sp, kFamilies[f], ds, train_pool, test_pool,
                              drift_ics, drift_times, opts, f));
    report.rows.push_back(runs.back().metrics);
  }

  const double scale = std::pow(10.0, p.scale_exponent);

  // Report table on the preset's scale.
  std::string csv =
      "model,train_mean,train_std,test_mean,test_std,energy_mean,energy_std,"
      "scale_exponent,spread\n";
  for (const auto& fm : report.rows) {
    csv += models::kind_name(fm.kind);
    csv += ',';
    csv += fmt(fm.train_mse.mean * scale);
    csv += ',';
    csv += fmt(fm.train_mse.std * scale);
    csv += ',';
    csv += fmt(fm.test_mse.mean * scale);
    csv += ',';
    csv += fmt(fm.test_mse.std * scale);
    csv += ',';
    csv += fmt(fm.drift.mean * scale);
    csv += ',';
    csv += fmt(fm.drift.std * scale);
    csv += ',';
    csv += std::to_string(p.scale_exponent);
    csv += ',';
    csv += fm.spread;
    csv += '\n';
  }
  report.report_csv = opts.out_dir / (p.name + "_report.csv");
  write_text(report.report_csv, csv);

  // Long-rollout plot data from the first test initial condition.
  write_energy_plot(p, opts, runs, drift_ics.front(), drift_times);
  write_trajectory_plot(p, opts, "true",
                        rollout_true(sp.dataset.system, drift_ics.front(),
                                     drift_times),
                        sp.dataset.system.dof);
  for (const auto& run : runs)
    write_trajectory_plot(p, opts, models::kind_name(run.metrics.kind),
                          rollout_model(*run.first_model, sp.dataset.system,
                                        drift_ics.front(), drift_times),
                          sp.dataset.system.dof);

  const auto& base = report.rows[0];
  const auto& hnn = report.rows[1];
  const auto& kar = report.rows[2];
  const auto& ref = reference_results(p.name);
  json summary = {
      {"preset", p.name},
      {"scale_exponent", p.scale_exponent},
      {"n_repeats", opts.n_repeats},
      {"trajectory_scale", opts.trajectory_scale},
      {"step_scale", opts.step_scale},
      {"drift_initials", drift_ics.size()},
      {"spread", base.spread},
      {"measured",
       {{"baseline", row_json(base, scale)},
        {"hnn", row_json(hnn, scale)},
        {"kar", row_json(kar, scale)}}},
      {"reference",
       {{"baseline", row_json(ref.baseline)},
        {"hnn", row_json(ref.hnn)},
        {"kar", row_json(ref.kar)}}},
      {"checks",
       {{"hnn_energy_below_baseline", hnn.drift.mean < base.drift.mean},
        {"kar_energy_below_baseline", kar.drift.mean < base.drift.mean},
        {"kar_test_at_most_hnn", kar.test_mse.mean <= hnn.test_mse.mean},
        {"kar_test_at_most_baseline",
         kar.test_mse.mean <= base.test_mse.mean}}}};
  report.summary_json = opts.out_dir / (p.name + "_summary.json");
  write_text(report.summary_json, summary.dump(2));

  note(opts, "[%s] report: %s", p.name.c_str(),
       report.report_csv.string().c_str());
  return report;
}

}  // namespace sympkan::eval
