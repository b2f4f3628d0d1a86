#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "sympkan/ad/parameter_store.hpp"
#include "sympkan/ad/tape.hpp"
#include "sympkan/rng.hpp"

using namespace sympkan;
using namespace sympkan::ad;

namespace {

// A fixed expression that exercises every generic op at least once:
// f = sin(t0)*t1 + exp(t0*t1/4)/t2 + tanh(t1)*sqrt(|t2|) + silu(t0 - t2)
//     + log(1 + t1^2) - sigmoid(t2)*t0 + silu'(t1)
Var build_mixed(Tape& tape) {
  Var t0 = tape.param(0);
  Var t1 = tape.param(1);
  Var t2 = tape.param(2);
  Var a = sin(t0) * t1;
  Var b = exp(t0 * t1 / 4.0) / t2;
  Var c = tanh(t1) * sqrt(square(t2) + 1.0);
  Var d = silu(t0 - t2);
  Var e = log(square(t1) + 1.0);
  Var f = sigmoid(t2) * t0;
  Var g = silu_prime(t1);
  std::vector<Var> terms = {a, b, c, d, e, neg(f), g};
  return sum(tape, terms);
}

double eval_mixed(std::span<const double> t) {
  auto sg = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  auto si = [&](double x) { return x * sg(x); };
  auto sip = [&](double x) { return sg(x) * (1.0 + x * (1.0 - sg(x))); };
  return std::sin(t[0]) * t[1] + std::exp(t[0] * t[1] / 4.0) / t[2] +
         std::tanh(t[1]) * std::sqrt(t[2] * t[2] + 1.0) + si(t[0] - t[2]) +
         std::log(t[1] * t[1] + 1.0) - sg(t[2]) * t[0] + sip(t[1]);
}

}  // namespace

TEST_CASE("gradient matches central differences on 100 random points") {
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    ParameterStore store;
    store.allocate("t", 3);
    store[0] = rng.uniform(-2.0, 2.0);
    store[1] = rng.uniform(-2.0, 2.0);
    store[2] = rng.uniform(0.5, 3.0);  // divisor stays away from zero

    Tape tape(&store);
    Var root = build_mixed(tape);
    const double val = tape.forward(root);
    CHECK(val == doctest::Approx(eval_mixed(store.values())).epsilon(1e-12));

    std::vector<double> grad = tape.backward(root);
    std::vector<double> want = oracles::fd_gradient(eval_mixed, store.values());
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(oracles::rel_err(grad[i], want[i]) <= 1e-5);
  }
}

TEST_CASE("value and gradient are bit-identical across rebuilds") {
  ParameterStore store;
  store.allocate("t", 3);
  store[0] = 0.7;
  store[1] = -1.3;
  store[2] = 2.1;

  Tape tape(&store);
  Var r1 = build_mixed(tape);
  const double v1 = tape.forward(r1);
  std::vector<double> g1 = tape.backward(r1);

  tape.reset();
  Var r2 = build_mixed(tape);
  const double v2 = tape.forward(r2);
  std::vector<double> g2 = tape.backward(r2);

  CHECK(v1 == v2);
  CHECK(g1 == g2);
}

TEST_CASE("forward flags the first non-finite node") {
  ParameterStore store;
  store.allocate("t", 1);
  store[0] = -1.0;
  Tape tape(&store);
  Var x = tape.param(0);
  Var bad = log(x);  // log of a negative number
  Var root = bad + 1.0;
  CHECK_THROWS_AS(tape.forward(root), NumericalError);
  try {
    tape.forward(root);
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("log") != std::string::npos);
  }
}

TEST_CASE("backward before forward is a usage error") {
  ParameterStore store;
  store.allocate("t", 1);
  store[0] = 1.0;
  Tape tape(&store);
  Var x = tape.param(0);
  Var root = square(x);
  CHECK_THROWS_AS(tape.backward(root), UsageError);
  tape.forward(root);
  CHECK_NOTHROW(tape.backward(root));
}

TEST_CASE("shared parameter accumulates its adjoint") {
  ParameterStore store;
  store.allocate("t", 1);
  store[0] = 1.5;
  Tape tape(&store);
  // x used through two separate leaves; d/dx (x^2 + 3x) = 2x + 3
  Var x1 = tape.param(0);
  Var x2 = tape.param(0);
  Var root = square(x1) + scale(x2, 3.0);
  tape.forward(root);
  std::vector<double> grad = tape.backward(root);
  CHECK(grad[0] == doctest::Approx(2.0 * 1.5 + 3.0).epsilon(1e-15));
  CHECK(tape.adjoint(root) == 1.0);
}

TEST_CASE("affine node equals the explicit sum and shares gradients") {
  Rng rng(7);
  ParameterStore store;
  store.allocate("w", 5);
  store.allocate("b", 1);
  for (std::size_t i = 0; i < 6; ++i) store[i] = rng.normal();

  const double xs[4] = {0.3, -0.8, 1.2, 0.5};

  Tape t1(&store);
  std::vector<Var> in1;
  for (double v : xs) in1.push_back(t1.input(v));
  // strided access: parameters 0, 2, 4 ... wait only 5 weights; use stride 1
  Var a1 = t1.affine(0, 1, 4, in1[0], 5);
  Var r1 = square(a1);
  t1.forward(r1);
  std::vector<double> g1 = t1.backward(r1);

  Tape t2(&store);
  std::vector<Var> terms;
  std::vector<Var> in2;
  for (double v : xs) in2.push_back(t2.input(v));
  for (int i = 0; i < 4; ++i) terms.push_back(t2.param(i) * in2[i]);
  terms.push_back(t2.param(5));
  Var a2 = sum(t2, terms);
  Var r2 = square(a2);
  t2.forward(r2);
  std::vector<double> g2 = t2.backward(r2);

  CHECK(t1.value(r1) == doctest::Approx(t2.value(r2)).epsilon(1e-15));
  for (std::size_t i = 0; i < 6; ++i)
    CHECK(g1[i] == doctest::Approx(g2[i]).epsilon(1e-14));
}

TEST_CASE("affine with stride walks a parameter column") {
  ParameterStore store;
  store.allocate("w", 6);  // think of it as 3x2 row-major
  for (std::size_t i = 0; i < 6; ++i) store[i] = double(i + 1);
  Tape tape(&store);
  Var x0 = tape.input(2.0);
  Var x1 = tape.input(-1.0);
  Var x2 = tape.input(0.5);
  (void)x1;
  (void)x2;
  // column 1 of the 3x2 matrix: params 1, 3, 5
  Var a = tape.affine(1, 2, 3, x0, -1);
  // 2*2 + 4*(-1) + 6*0.5 = 3
  CHECK(tape.value(a) == doctest::Approx(3.0).epsilon(1e-15));
  tape.forward(a);
  std::vector<double> g = tape.backward(a);
  CHECK(g[1] == 2.0);
  CHECK(g[3] == -1.0);
  CHECK(g[5] == 0.5);
  CHECK(g[0] == 0.0);
}

TEST_CASE("spline combo node: coefficient gradient is the basis row") {
  ParameterStore store;
  store.allocate("c", 4);
  store[0] = 0.5;
  store[1] = -1.0;
  store[2] = 2.0;
  store[3] = 0.25;
  Tape tape(&store);
  Var x = tape.input(0.0);
  const double basis[4] = {0.1, 0.6, 0.3, 0.0};
  const double px = 1.75;  // pretend d/dx value
  Var combo = tape.spline_combo(0, basis, x, px);
  CHECK(tape.value(combo) ==
        doctest::Approx(0.5 * 0.1 - 1.0 * 0.6 + 2.0 * 0.3).epsilon(1e-15));
  Var root = scale(combo, 2.0);
  tape.forward(root);
  std::vector<double> g = tape.backward(root);
  for (int i = 0; i < 4; ++i)
    CHECK(g[i] == doctest::Approx(2.0 * basis[i]).epsilon(1e-15));
  CHECK(tape.adjoint(x) == doctest::Approx(2.0 * px).epsilon(1e-15));
}

TEST_CASE("non-recording tape evaluates but refuses backward") {
  ParameterStore store;
  store.allocate("t", 1);
  store[0] = 0.3;
  Tape tape(&store);
  tape.set_recording(false);
  Var x = tape.param(0);
  Var root = silu(x) + sin(x);
  const double v = tape.forward(root);
  CHECK(v == doctest::Approx(0.3 / (1.0 + std::exp(-0.3)) + std::sin(0.3)));
  CHECK_THROWS_AS(tape.backward(root), UsageError);
}

TEST_CASE("parameter store slices are disjoint and cover the vector") {
  ParameterStore store;
  store.allocate("a", 3);
  store.allocate("b", 2);
  store.allocate("c", 4);
  store.freeze();
  CHECK(store.size() == 9);
  std::size_t expect = 0;
  for (const auto& s : store.slices()) {
    CHECK(s.offset == expect);
    expect += s.size;
  }
  CHECK(expect == store.size());
  CHECK_THROWS_AS(store.allocate("d", 1), UsageError);
  CHECK(store.slice("b").size() == 2);
  CHECK_THROWS_AS(store.slice("nope"), UsageError);
}
