#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "oracles.hpp"
#include "sympkan/errors.hpp"
#include "sympkan/models/feedforward.hpp"
#include "sympkan/models/kar.hpp"
#include "sympkan/models/model.hpp"
#include "sympkan/rng.hpp"

using namespace sympkan;
using namespace sympkan::models;

namespace {

std::vector<ad::Var> emit_inputs(ad::Tape& tape, std::span<const double> z) {
  std::vector<ad::Var> in(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) in[i] = tape.input(z[i]);
  return in;
}

KarOptions small_kar_options() {
  KarOptions o;
  o.widths = {2, 2, 1};
  o.grid_intervals = 3;
  o.degree = 3;
  o.input_domains = {1.5, 2.0};
  o.hidden_halfwidth = 3.0;
  return o;
}

double net_value(const FeedForward& net, std::span<const double> z) {
  ad::Tape tape(&net.params());
  auto in = emit_inputs(tape, z);
  return tape.value(net.forward(tape, in).front());
}

}  // namespace

TEST_CASE("feedforward seeds are reproducible and seed-sensitive") {
  FeedForward a({3, 8, 1}, 42);
  FeedForward b({3, 8, 1}, 42);
  FeedForward c({3, 8, 1}, 43);
  REQUIRE(a.params().size() == b.params().size());
  for (std::size_t i = 0; i < a.params().size(); ++i)
    CHECK(a.params()[i] == b.params()[i]);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.params().size(); ++i)
    if (a.params()[i] != c.params()[i]) any_diff = true;
  CHECK(any_diff);
  // biases start at zero
  for (std::size_t l = 0; l < 2; ++l) {
    const std::size_t b0 = a.bias_offset(l);
    const int out = a.widths()[l + 1];
    for (int j = 0; j < out; ++j) CHECK(a.params()[b0 + j] == 0.0);
  }
}

TEST_CASE("feedforward forward matches a hand-rolled dense network") {
  FeedForward net({2, 4, 3}, 7);
  const auto& th = net.params();
  std::vector<double> z = {0.3, -1.1};

  // by hand: h = tanh(W0 z + b0), y = W1 h + b1
  std::vector<double> h(4), y(3);
  for (int j = 0; j < 4; ++j) {
    double s = th[net.bias_offset(0) + j];
    for (int i = 0; i < 2; ++i) s += th[net.weight_offset(0) + j * 2 + i] * z[i];
    h[j] = std::tanh(s);
  }
  for (int j = 0; j < 3; ++j) {
    double s = th[net.bias_offset(1) + j];
    for (int i = 0; i < 4; ++i) s += th[net.weight_offset(1) + j * 4 + i] * h[i];
    y[j] = s;
  }

  ad::Tape tape(&th);
  auto in = emit_inputs(tape, z);
  auto out = net.forward(tape, in);
  REQUIRE(out.size() == 3);
  for (int j = 0; j < 3; ++j)
    CHECK(oracles::rel_err(tape.value(out[j]), y[j]) < 1e-14);
}

TEST_CASE("feedforward parameter gradients match finite differences") {
  FeedForward net({2, 6, 5, 1}, 11);
  std::vector<double> z = {0.4, -0.8};

  ad::Tape tape(&net.params());
  auto in = emit_inputs(tape, z);
  ad::Var y = net.forward(tape, in).front();
  tape.forward(y);
  auto grad = tape.backward(y);

  FeedForward probe({2, 6, 5, 1}, 11);
  auto fd = oracles::fd_gradient(
      [&](std::span<const double> th) {
        for (std::size_t i = 0; i < th.size(); ++i) probe.params()[i] = th[i];
        return net_value(probe, z);
      },
      net.params().values());
  REQUIRE(grad.size() == fd.size());
  for (std::size_t i = 0; i < fd.size(); ++i)
    CHECK(oracles::rel_err(grad[i], fd[i]) < 1e-5);
}

TEST_CASE("feedforward input gradient matches finite differences") {
  FeedForward net({4, 10, 7, 1}, 3);
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> z(4);
    for (double& v : z) v = rng.uniform(-2.0, 2.0);

    ad::Tape tape(&net.params());
    auto in = emit_inputs(tape, z);
    auto g = net.input_gradient(tape, in);
    REQUIRE(g.size() == 4);

    for (int s = 0; s < 4; ++s) {
      double fd = oracles::central_diff(
          [&](double xs) {
            std::vector<double> zz = z;
            zz[static_cast<std::size_t>(s)] = xs;
            return net_value(net, zz);
          },
          z[static_cast<std::size_t>(s)]);
      CHECK(oracles::rel_err(tape.value(g[static_cast<std::size_t>(s)]), fd) <
            1e-6);
    }
  }
}

TEST_CASE("gradients through the feedforward input-gradient graph are exact") {
  // loss = sum_s g_s(z)^2 must be differentiable in the parameters; this is
  // the path the Hamiltonian training loss takes.
  FeedForward net({2, 5, 1}, 21);
  std::vector<double> z = {0.7, -0.2};

  ad::Tape tape(&net.params());
  auto in = emit_inputs(tape, z);
  auto g = net.input_gradient(tape, in);
  ad::Var loss = ad::add(ad::square(g[0]), ad::square(g[1]));
  tape.forward(loss);
  auto grad = tape.backward(loss);

  FeedForward probe({2, 5, 1}, 21);
  auto fd = oracles::fd_gradient(
      [&](std::span<const double> th) {
        for (std::size_t i = 0; i < th.size(); ++i) probe.params()[i] = th[i];
        ad::Tape t2(&probe.params());
        auto in2 = emit_inputs(t2, z);
        auto g2 = probe.input_gradient(t2, in2);
        double s = 0.0;
        for (ad::Var v : g2) s += t2.value(v) * t2.value(v);
        return s;
      },
      net.params().values(), 1e-4);
  REQUIRE(grad.size() == fd.size());
  for (std::size_t i = 0; i < fd.size(); ++i)
    CHECK(oracles::rel_err(grad[i], fd[i]) < 2e-5);
}

TEST_CASE("feedforward rejects bad input shapes") {
  FeedForward net({3, 4, 1}, 5);
  ad::Tape tape(&net.params());
  auto in = emit_inputs(tape, std::vector<double>{1.0, 2.0});
  CHECK_THROWS_AS(net.forward(tape, in), ShapeError);

  // non-contiguous nodes
  ad::Var a = tape.input(0.1);
  ad::Var gap = tape.constant(0.0);
  (void)gap;
  ad::Var b = tape.input(0.2);
  ad::Var c = tape.input(0.3);
  std::vector<ad::Var> bad = {a, b, c};
  CHECK_THROWS_AS(net.forward(tape, bad), UsageError);

  FeedForward vec({2, 4, 2}, 5);
  ad::Tape t2(&vec.params());
  auto in2 = emit_inputs(t2, std::vector<double>{1.0, 2.0});
  CHECK_THROWS_AS(vec.input_gradient(t2, in2), UsageError);
}

TEST_CASE("spline network value is the layered sum of its edges") {
  KarHamiltonian kar(small_kar_options(), 17);
  std::vector<double> z = {0.35, -0.6};

  ad::Tape tape(&kar.params());
  auto in = emit_inputs(tape, z);
  double got = tape.value(kar.eval(tape, in));

  // by hand through the public edge accessor
  auto edge_val = [&](const spline::UnivariateEdge& e, double x) {
    ad::Tape t(&kar.params());
    return t.value(e.eval(t, t.input(x)));
  };
  double h0 = edge_val(kar.edge(0, 0, 0), z[0]) + edge_val(kar.edge(0, 1, 0), z[1]);
  double h1 = edge_val(kar.edge(0, 0, 1), z[0]) + edge_val(kar.edge(0, 1, 1), z[1]);
  double want = edge_val(kar.edge(1, 0, 0), h0) + edge_val(kar.edge(1, 1, 0), h1);
  CHECK(oracles::rel_err(got, want) < 1e-13);
}

TEST_CASE("spline network input gradient matches finite differences") {
  KarHamiltonian kar(small_kar_options(), 23);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    // include points outside the spline domains
    std::vector<double> z = {rng.uniform(-2.5, 2.5), rng.uniform(-3.0, 3.0)};
    ad::Tape tape(&kar.params());
    auto in = emit_inputs(tape, z);
    auto g = kar.input_gradient(tape, in);

    for (int s = 0; s < 2; ++s) {
      double fd = oracles::central_diff(
          [&](double xs) {
            std::vector<double> zz = z;
            zz[static_cast<std::size_t>(s)] = xs;
            ad::Tape t(&kar.params());
            auto in2 = emit_inputs(t, zz);
            return t.value(kar.eval(t, in2));
          },
          z[static_cast<std::size_t>(s)]);
      CHECK(oracles::rel_err(tape.value(g[static_cast<std::size_t>(s)]), fd) <
            1e-6);
    }
  }
}

TEST_CASE("gradients through the spline-network gradient graph are exact") {
  KarHamiltonian kar(small_kar_options(), 31);
  std::vector<double> z = {0.8, -1.2};

  ad::Tape tape(&kar.params());
  auto in = emit_inputs(tape, z);
  auto g = kar.input_gradient(tape, in);
  ad::Var loss = ad::add(ad::square(g[0]), ad::square(g[1]));
  tape.forward(loss);
  auto grad = tape.backward(loss);

  KarHamiltonian probe(small_kar_options(), 31);
  auto fd = oracles::fd_gradient(
      [&](std::span<const double> th) {
        for (std::size_t i = 0; i < th.size(); ++i) probe.params()[i] = th[i];
        ad::Tape t2(&probe.params());
        auto in2 = emit_inputs(t2, z);
        auto g2 = probe.input_gradient(t2, in2);
        double s = 0.0;
        for (ad::Var v : g2) s += t2.value(v) * t2.value(v);
        return s;
      },
      kar.params().values(), 1e-5);
  REQUIRE(grad.size() == fd.size());
  for (std::size_t i = 0; i < fd.size(); ++i)
    CHECK(oracles::rel_err(grad[i], fd[i]) < 1e-5);
}

TEST_CASE("all-zero spline network evaluates to zero everywhere") {
  KarHamiltonian kar(small_kar_options(), 1);
  for (std::size_t i = 0; i < kar.params().size(); ++i) kar.params()[i] = 0.0;
  ad::Tape tape(&kar.params());
  auto in = emit_inputs(tape, std::vector<double>{0.9, -0.4});
  CHECK(tape.value(kar.eval(tape, in)) == 0.0);
  auto g = kar.input_gradient(tape, in);
  CHECK(tape.value(g[0]) == 0.0);
  CHECK(tape.value(g[1]) == 0.0);
}

TEST_CASE("spline network validates its configuration") {
  KarOptions o = small_kar_options();
  o.input_domains = {1.0};
  CHECK_THROWS_AS(KarHamiltonian(o, 1), ShapeError);
  o = small_kar_options();
  o.widths = {2, 2, 3};
  CHECK_THROWS_AS(KarHamiltonian(o, 1), UsageError);
  o = small_kar_options();
  o.input_domains = {1.0, -1.0};
  CHECK_THROWS_AS(KarHamiltonian(o, 1), UsageError);
}

TEST_CASE("symplectic field pairs the Hamiltonian gradient") {
  Model mlp = MlpHamiltonian({4, 12, 1}, 9);
  Model kar = [] {
    KarOptions o;
    o.widths = {4, 3, 1};
    o.grid_intervals = 3;
    o.degree = 3;
    o.input_domains = {2.0, 2.0, 2.0, 2.0};
    return KarHamiltonian(o, 9);
  }();

  for (const Model* m : {&mlp, &kar}) {
    std::vector<double> z = {0.3, -0.5, 0.8, 0.1};
    ad::Tape scratch(&model_params(*m));

    std::vector<double> f(4);
    field_values(*m, scratch, z, f);

    // against central differences of the Hamiltonian itself
    for (int i = 0; i < 4; ++i) {
      double dH = oracles::central_diff(
          [&](double v) {
            std::vector<double> zz = z;
            zz[static_cast<std::size_t>(i)] = v;
            return hamiltonian_value(*m, scratch, zz);
          },
          z[static_cast<std::size_t>(i)]);
      if (i < 2)
        CHECK(oracles::rel_err(f[i + 2], -dH) < 1e-6);  // dp/dt = -dH/dq
      else
        CHECK(oracles::rel_err(f[i - 2], dH) < 1e-6);   // dq/dt =  dH/dp
    }
  }
}

TEST_CASE("symplectic fields are divergence-free") {
  Model m = MlpHamiltonian({4, 16, 16, 1}, 13);
  ad::Tape scratch(&model_params(m));
  std::vector<double> z = {0.2, -0.7, 0.5, 0.9};

  double div = 0.0;
  for (int i = 0; i < 4; ++i) {
    div += oracles::central_diff(
        [&](double v) {
          std::vector<double> zz = z;
          zz[static_cast<std::size_t>(i)] = v;
          std::vector<double> f(4);
          field_values(m, scratch, zz, f);
          return f[static_cast<std::size_t>(i)];
        },
        z[static_cast<std::size_t>(i)]);
  }
  CHECK(std::abs(div) < 1e-5);
}

TEST_CASE("shifting the output bias moves the Hamiltonian but not the field") {
  Model m = MlpHamiltonian({2, 8, 1}, 29);
  ad::Tape scratch(&model_params(m));
  std::vector<double> z = {0.6, -0.9};

  std::vector<double> f0(2);
  field_values(m, scratch, z, f0);
  double h0 = hamiltonian_value(m, scratch, z);

  auto& net = std::get<MlpHamiltonian>(m).net;
  model_params(m)[net.bias_offset(1)] += 10.0;

  std::vector<double> f1(2);
  field_values(m, scratch, z, f1);
  CHECK(hamiltonian_value(m, scratch, z) == doctest::Approx(h0 + 10.0));
  CHECK(f1[0] == f0[0]);
  CHECK(f1[1] == f0[1]);
}

TEST_CASE("baseline networks refuse Hamiltonian queries") {
  Model m = BaselineNet({2, 6, 2}, 3);
  ad::Tape tape(&model_params(m));
  auto in = emit_inputs(tape, std::vector<double>{0.1, 0.2});
  CHECK_THROWS_AS(eval_hamiltonian(m, tape, in), ModelKindError);
  CHECK_THROWS_AS(symplectic_vector_field(m, tape, in), ModelKindError);
  // but the plain field works
  std::vector<double> f(2);
  ad::Tape scratch(&model_params(m));
  field_values(m, scratch, std::vector<double>{0.1, 0.2}, f);
  CHECK(std::isfinite(f[0]));
  CHECK(std::isfinite(f[1]));
}

TEST_CASE("baseline network shape rules") {
  CHECK_THROWS_AS(BaselineNet({2, 6, 4}, 1), UsageError);
  CHECK_THROWS_AS(BaselineNet({3, 6, 3}, 1), UsageError);
  CHECK_THROWS_AS(MlpHamiltonian({2, 6, 2}, 1), UsageError);
  CHECK_THROWS_AS(MlpHamiltonian({3, 6, 1}, 1), UsageError);
}

TEST_CASE("model kinds map to stable names") {
  CHECK(kind_name(ModelKind::kBaseline) == std::string("baseline"));
  CHECK(kind_name(ModelKind::kMlpHnn) == std::string("mlp_hnn"));
  CHECK(kind_name(ModelKind::kKarHnn) == std::string("kar_hnn"));
  CHECK(kind_from_name("kar_hnn") == ModelKind::kKarHnn);
  CHECK_THROWS_AS(kind_from_name("mystery"), ModelKindError);

  Model b = BaselineNet({2, 4, 2}, 1);
  Model p = MlpHamiltonian({2, 4, 1}, 1);
  Model k = KarHamiltonian(small_kar_options(), 1);
  CHECK(model_kind(b) == ModelKind::kBaseline);
  CHECK(model_kind(p) == ModelKind::kMlpHnn);
  CHECK(model_kind(k) == ModelKind::kKarHnn);
  CHECK(model_input_dim(k) == 2);
}

TEST_CASE("model files round-trip bit for bit") {
  const auto dir = std::filesystem::temp_directory_path();

  Model models[] = {Model(BaselineNet({4, 10, 4}, 101)),
                    Model(MlpHamiltonian({4, 10, 1}, 102)),
                    Model(KarHamiltonian(small_kar_options(), 103))};
  int idx = 0;
  for (Model& m : models) {
    const auto path = dir / ("roundtrip_" + std::to_string(idx++) + ".khm");
    save_model(m, path);
    Model back = load_model(path);
    CHECK(model_kind(back) == model_kind(m));
    const auto& a = model_params(m);
    const auto& b = model_params(back);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

    // serializing again yields the identical byte stream
    CHECK(serialize(back) == serialize(m));
    std::filesystem::remove(path);
  }
}

TEST_CASE("model files reject corruption with located errors") {
  Model m = MlpHamiltonian({2, 4, 1}, 7);
  auto bytes = serialize(m);

  SUBCASE("bad magic") {
    bytes[0] = 'X';
    CHECK_THROWS_AS(deserialize(bytes), FormatError);
  }
  SUBCASE("version mismatch names both versions") {
    bytes[4] = 9;
    try {
      deserialize(bytes);
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      std::string msg = e.what();
      CHECK(msg.find("expected 1") != std::string::npos);
      CHECK(msg.find("found 9") != std::string::npos);
    }
  }
  SUBCASE("truncated parameters") {
    bytes.resize(bytes.size() - 5);
    CHECK_THROWS_AS(deserialize(bytes), FormatError);
  }
  SUBCASE("trailing bytes") {
    bytes.push_back(0);
    CHECK_THROWS_AS(deserialize(bytes), FormatError);
  }
  SUBCASE("header is not JSON") {
    bytes[16] = '!';
    CHECK_THROWS_AS(deserialize(bytes), FormatError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_model("/nonexistent/dir/m.khm"), IoError);
  }
}

TEST_CASE("numeric helpers agree with graph evaluation") {
  Model m = MlpHamiltonian({2, 7, 1}, 55);
  ad::Tape scratch(&model_params(m));
  std::vector<double> z = {1.1, -0.3};

  ad::Tape tape(&model_params(m));
  auto in = emit_inputs(tape, z);
  double via_graph = tape.value(eval_hamiltonian(m, tape, in));
  CHECK(hamiltonian_value(m, scratch, z) == via_graph);

  // the scratch tape can be reused and can run without recording
  scratch.set_recording(false);
  std::vector<double> f(2);
  field_values(m, scratch, z, f);
  ad::Tape t3(&model_params(m));
  auto in3 = emit_inputs(t3, z);
  auto fg = symplectic_vector_field(m, t3, in3);
  CHECK(f[0] == t3.value(fg[0]));
  CHECK(f[1] == t3.value(fg[1]));
}
