#include "sympkan/systems/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <utility>

#include <nlohmann/json.hpp>

#include "sympkan/errors.hpp"
#include "sympkan/systems/integrate.hpp"

namespace sympkan::systems {

namespace {

using nlohmann::json;

void append_double(std::string& out, double v) {
  if (!std::isfinite(v)) throw IoError("refusing to serialize a non-finite value");
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc()) throw IoError("float serialization failed");
  out.append(buf, res.ptr);
}

void append_array(std::string& out, std::span<const double> v) {
  out.push_back('[');
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(',');
    append_double(out, v[i]);
  }
  out.push_back(']');
}

void append_matrix(std::string& out, const std::vector<std::vector<double>>& m) {
  out.push_back('[');
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i) out.push_back(',');
    append_array(out, m[i]);
  }
  out.push_back(']');
}

std::string trajectory_line(const Trajectory& t) {
  std::string out;
  out.reserve(64 * t.samples());
  out += "{\"t\":";
  append_array(out, t.times);
  out += ",\"q\":";
  append_matrix(out, t.q);
  out += ",\"p\":";
  append_matrix(out, t.p);
  out += ",\"dq\":";
  append_matrix(out, t.dq);
  out += ",\"dp\":";
  append_matrix(out, t.dp);
  out += ",\"H\":";
  append_array(out, t.energies);
  out += "}";
  return out;
}

std::vector<std::vector<double>> matrix_field(const json& j, const char* key,
                                              std::size_t rows, std::size_t cols,
                                              std::size_t line_no) {
  auto m = j.at(key).get<std::vector<std::vector<double>>>();
  if (m.size() != rows)
    throw FormatError(std::string("trajectory line ") + std::to_string(line_no) +
                      ": '" + key + "' has " + std::to_string(m.size()) +
                      " rows, expected " + std::to_string(rows));
  for (const auto& row : m)
    if (row.size() != cols)
      throw FormatError(std::string("trajectory line ") +
                        std::to_string(line_no) + ": '" + key +
                        "' row width " + std::to_string(row.size()) +
                        ", expected " + std::to_string(cols));
  return m;
}

Trajectory parse_trajectory(const std::string& line, int dof,
                            std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError("trajectory line " + std::to_string(line_no) +
                      " is not valid JSON: " + e.what());
  }
  Trajectory t;
  try {
    t.times = j.at("t").get<std::vector<double>>();
    const std::size_t T = t.times.size();
    const auto d = static_cast<std::size_t>(dof);
    t.q = matrix_field(j, "q", T, d, line_no);
    t.p = matrix_field(j, "p", T, d, line_no);
    t.dq = matrix_field(j, "dq", T, d, line_no);
    t.dp = matrix_field(j, "dp", T, d, line_no);
    t.energies = j.at("H").get<std::vector<double>>();
    if (t.energies.size() != T)
      throw FormatError("trajectory line " + std::to_string(line_no) +
                        ": 'H' length mismatch");
  } catch (const json::exception& e) {
    throw FormatError("trajectory line " + std::to_string(line_no) +
                      " is missing fields: " + e.what());
  }
  return t;
}

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<Trajectory>& trajs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const Trajectory& t : trajs) {
    out << trajectory_line(t) << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<Trajectory> read_jsonl(const std::filesystem::path& path, int dof) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<Trajectory> trajs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    trajs.push_back(parse_trajectory(line, dof, line_no));
  }
  return trajs;
}

std::vector<double> sample_spring(const SystemSpec& spec, Rng& rng) {
  // uniform energy band, uniform phase on the level circle
  const double e = rng.uniform(0.2, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double r = std::sqrt(2.0 * e / spec.spring_k);
  const double rp = std::sqrt(2.0 * e * spec.mass);
  return {r * std::cos(phi), rp * std::sin(phi)};
}

std::vector<double> sample_pendulum(const SystemSpec& spec, Rng& rng) {
  // rejection-sample the phase box onto the energy band [0.5, 4.0],
  // staying below the separatrix (here at H = 6)
  const double ml2 = spec.mass * spec.length * spec.length;
  const double pmax = 1.05 * std::sqrt(2.0 * ml2 * 4.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double q = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double p = rng.uniform(-pmax, pmax);
    const std::vector<double> z = {q, p};
    const double h = hamiltonian(spec, z);
    if (h >= 0.5 && h <= 4.0) return z;
  }
  throw NumericalError("pendulum sampler failed to hit the energy band");
}

std::vector<double> sample_two_body(const SystemSpec& spec, Rng& rng) {
  // circular orbit in the center-of-mass frame, then a tangential speed
  // factor to open it into an ellipse
  const double r = rng.uniform(0.8, 1.5);
  const double alpha = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double f = rng.uniform(0.85, 1.15);
  const double v = f * std::sqrt(spec.g_grav * spec.masses[0] / (2.0 * r));

  const double cx = std::cos(alpha), sx = std::sin(alpha);
  std::vector<double> z(8);
  z[0] = 0.5 * r * cx;
  z[1] = 0.5 * r * sx;
  z[2] = -z[0];
  z[3] = -z[1];
  z[4] = -spec.masses[0] * v * sx;
  z[5] = spec.masses[0] * v * cx;
  z[6] = -z[4];
  z[7] = -z[5];
  return z;
}

std::vector<double> sample_three_body(const SystemSpec& spec, Rng& rng) {
  // three bodies near the vertices of an equilateral triangle on a common
  // circle, near-circular tangential momenta, then a center-of-mass
  // momentum rebalance
  const double r = rng.uniform(0.9, 1.2);
  const double alpha = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double v0 = std::sqrt(spec.g_grav * spec.masses[0] /
                              (std::sqrt(3.0) * r));
  std::vector<double> z(12);
  double px = 0.0, py = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double theta = alpha + 2.0 * std::numbers::pi * k / 3.0 +
                         rng.uniform(-0.1, 0.1);
    const double f = rng.uniform(0.9, 1.1);
    z[2 * k] = r * std::cos(theta);
    z[2 * k + 1] = r * std::sin(theta);
    const double m = spec.masses[static_cast<std::size_t>(k)];
    z[6 + 2 * k] = -m * v0 * f * std::sin(theta);
    z[6 + 2 * k + 1] = m * v0 * f * std::cos(theta);
    px += z[6 + 2 * k];
    py += z[6 + 2 * k + 1];
  }
  for (int k = 0; k < 3; ++k) {
    z[6 + 2 * k] -= px / 3.0;
    z[6 + 2 * k + 1] -= py / 3.0;
  }
  return z;
}

}  // namespace

std::vector<double> Trajectory::state(std::size_t i) const {
  std::vector<double> z(q[i]);
  z.insert(z.end(), p[i].begin(), p[i].end());
  return z;
}

std::vector<double> Trajectory::derivative(std::size_t i) const {
  std::vector<double> z(dq[i]);
  z.insert(z.end(), dp[i].begin(), dp[i].end());
  return z;
}

std::vector<double> sample_initial_conditions(const SystemSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case SystemKind::kSpringMass: return sample_spring(spec, rng);
    case SystemKind::kPendulum: return sample_pendulum(spec, rng);
    case SystemKind::kTwoBody: return sample_two_body(spec, rng);
    case SystemKind::kThreeBody: return sample_three_body(spec, rng);
  }
  throw UsageError("bad system kind");
}

void add_noise(Trajectory& traj, double sigma2, Rng& rng) {
  if (sigma2 < 0.0) throw UsageError("noise variance must be nonnegative");
  if (sigma2 == 0.0) return;
  const double sd = std::sqrt(sigma2);
  for (std::size_t i = 0; i < traj.samples(); ++i) {
    for (double& v : traj.q[i]) v += rng.normal(0.0, sd);
    for (double& v : traj.p[i]) v += rng.normal(0.0, sd);
    for (double& v : traj.dq[i]) v += rng.normal(0.0, sd);
    for (double& v : traj.dp[i]) v += rng.normal(0.0, sd);
  }
}

Trajectory generate_trajectory(const SystemSpec& spec,
                               std::span<const double> z0, int samples,
                               double t_end) {
  if (samples < 1) throw UsageError("need at least one sample");
  if (t_end < 0.0) throw UsageError("t_end must be nonnegative");

  std::vector<double> times;
  if (samples == 1 || t_end == 0.0) {
    times = {0.0};
  } else {
    times.resize(static_cast<std::size_t>(samples));
    for (int j = 0; j < samples; ++j)
      times[static_cast<std::size_t>(j)] =
          t_end * static_cast<double>(j) / static_cast<double>(samples - 1);
  }

  Rk45Options opts;  // data generation runs at tight tolerances
  auto states = integrate_rk45(field_of(spec), z0, times, opts);

  Trajectory t;
  t.times = std::move(times);
  const auto d = static_cast<std::size_t>(spec.dof);
  std::vector<double> dz(2 * d);
  for (auto& z : states) {
    true_vector_field(spec, z, dz);
    t.q.emplace_back(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(d));
    t.p.emplace_back(z.begin() + static_cast<std::ptrdiff_t>(d), z.end());
    t.dq.emplace_back(dz.begin(), dz.begin() + static_cast<std::ptrdiff_t>(d));
    t.dp.emplace_back(dz.begin() + static_cast<std::ptrdiff_t>(d), dz.end());
    t.energies.push_back(hamiltonian(spec, z));
  }
  return t;
}

Dataset build_dataset(const DatasetConfig& config) {
  if (config.n_train < 0 || config.n_test < 0)
    throw UsageError("trajectory counts must be nonnegative");
  Dataset ds;
  ds.config = config;
  Rng root(config.seed);
  const int total = config.n_train + config.n_test;
  for (int i = 0; i < total; ++i) {
    Rng child = root.child(static_cast<std::uint64_t>(i));
    const auto z0 = sample_initial_conditions(config.system, child);
    Trajectory t =
        generate_trajectory(config.system, z0, config.samples, config.t_end);
    add_noise(t, config.sigma2, child);
    (i < config.n_train ? ds.train : ds.test).push_back(std::move(t));
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir,
                  const std::string& prefix) {
  std::filesystem::create_directories(dir);
  write_jsonl(dir / (prefix + "_train.jsonl"), ds.train);
  write_jsonl(dir / (prefix + "_test.jsonl"), ds.test);

  json meta;
  meta["system"] = ds.config.system.name;
  meta["dof"] = ds.config.system.dof;
  meta["n_train"] = ds.config.n_train;
  meta["n_test"] = ds.config.n_test;
  meta["samples"] = ds.config.samples;
  meta["t_end"] = ds.config.t_end;
  meta["sigma2"] = ds.config.sigma2;
  meta["seed"] = ds.config.seed;

  const auto meta_path = dir / (prefix + "_meta.json");
  std::ofstream out(meta_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + meta_path.string() + "' for writing");
  out << meta.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + meta_path.string() + "'");
}

Dataset load_dataset(const std::filesystem::path& dir,
                     const std::string& prefix) {
  const auto meta_path = dir / (prefix + "_meta.json");
  std::ifstream in(meta_path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + meta_path.string() + "'");
  json meta;
  try {
    in >> meta;
  } catch (const json::exception& e) {
    throw FormatError("metadata '" + meta_path.string() +
                      "' is not valid JSON: " + e.what());
  }

  Dataset ds;
  try {
    ds.config.system = SystemSpec::from_name(meta.at("system").get<std::string>());
    ds.config.n_train = meta.at("n_train").get<int>();
    ds.config.n_test = meta.at("n_test").get<int>();
    ds.config.samples = meta.at("samples").get<int>();
    ds.config.t_end = meta.at("t_end").get<double>();
    ds.config.sigma2 = meta.at("sigma2").get<double>();
    ds.config.seed = meta.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw FormatError("metadata '" + meta_path.string() +
                      "' is missing fields: " + e.what());
  }

  ds.train = read_jsonl(dir / (prefix + "_train.jsonl"), ds.config.system.dof);
  ds.test = read_jsonl(dir / (prefix + "_test.jsonl"), ds.config.system.dof);
  if (ds.train.size() != static_cast<std::size_t>(ds.config.n_train) ||
      ds.test.size() != static_cast<std::size_t>(ds.config.n_test))
    throw FormatError("dataset '" + prefix + "' holds " +
                      std::to_string(ds.train.size()) + "/" +
                      std::to_string(ds.test.size()) +
                      " trajectories but the metadata declares " +
                      std::to_string(ds.config.n_train) + "/" +
                      std::to_string(ds.config.n_test));
  return ds;
}

}  // namespace sympkan::systems
