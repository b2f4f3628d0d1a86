#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "sympkan/spline/bspline.hpp"
#include "sympkan/spline/edge.hpp"
#include "sympkan/rng.hpp"

using namespace sympkan;
using namespace sympkan::spline;

TEST_CASE("frozen values: cubic basis on [-1,1] with 2 intervals at x=0") {
  SplineGrid g = SplineGrid::uniform(-1.0, 1.0, 2, 3);
  REQUIRE(g.basis_count() == 5);
  REQUIRE(g.knots.size() == 9);
  CHECK(g.knots.front() == doctest::Approx(-4.0));
  CHECK(g.knots.back() == doctest::Approx(4.0));

  std::vector<double> v(5);
  bspline_basis(g, 0.0, v);
  const double want[5] = {0.0, 1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0, 0.0};
  for (int j = 0; j < 5; ++j)
    CHECK(v[j] == doctest::Approx(want[j]).epsilon(1e-14));

  // cross-check the whole row against the naive recursive definition
  for (int j = 0; j < 5; ++j) {
    const double ref = oracles::bspline_recursive(g.knots, j, 3, 0.0);
    CHECK(std::abs(v[j] - ref) <= 1e-14);
  }
}

TEST_CASE("basis matches the recursive definition at random points") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int G = 1 + static_cast<int>(rng.uniform_int(8));
    const int k = static_cast<int>(rng.uniform_int(6));
    const double a = rng.uniform(-3.0, 0.0);
    const double b = a + rng.uniform(0.5, 4.0);
    SplineGrid g = SplineGrid::uniform(a, b, G, k);
    std::vector<double> v(g.basis_count());
    const double x = rng.uniform(a, b);
    bspline_basis(g, x, v);
    for (int j = 0; j < g.basis_count(); ++j) {
      const double ref = oracles::bspline_recursive(g.knots, j, k, x);
      CHECK(std::abs(v[j] - ref) <= 1e-13);
    }
  }
}

TEST_CASE("partition of unity on the domain, including both endpoints") {
  Rng rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const int G = 1 + static_cast<int>(rng.uniform_int(10));
    const int k = static_cast<int>(rng.uniform_int(6));
    const double a = rng.uniform(-2.0, 0.0);
    const double b = a + rng.uniform(0.25, 5.0);
    SplineGrid g = SplineGrid::uniform(a, b, G, k);
    std::vector<double> v(g.basis_count());
    for (int s = 0; s <= 20; ++s) {
      const double x = s < 19 ? rng.uniform(a, b) : (s == 19 ? a : b);
      bspline_basis(g, x, v);
      const double total = std::accumulate(v.begin(), v.end(), 0.0);
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("local support: zero exactly outside the knot span") {
  Rng rng(13);
  SplineGrid g = SplineGrid::uniform(-1.0, 2.0, 5, 3);
  std::vector<double> v(g.basis_count());
  for (int trial = 0; trial < 200; ++trial) {
    const double x = rng.uniform(-4.5, 5.5);
    bspline_basis(g, x, v);
    for (int j = 0; j < g.basis_count(); ++j) {
      const double lo = g.knots[static_cast<std::size_t>(j)];
      const double hi = g.knots[static_cast<std::size_t>(j + g.degree + 1)];
      if (x < lo || x > hi) {
        CHECK(v[static_cast<std::size_t>(j)] == 0.0);
      } else if (x > lo && x < hi) {
        CHECK(v[static_cast<std::size_t>(j)] > 0.0);
      }
    }
  }
}

TEST_CASE("derivatives sum to zero and match finite differences") {
  Rng rng(14);
  for (int trial = 0; trial < 40; ++trial) {
    const int G = 1 + static_cast<int>(rng.uniform_int(8));
    const int k = 1 + static_cast<int>(rng.uniform_int(5));
    SplineGrid g = SplineGrid::uniform(-1.5, 1.0, G, k);
    std::vector<double> d(g.basis_count());
    const double x = rng.uniform(-1.5, 1.0);
    bspline_basis_derivative(g, x, d);
    CHECK(std::abs(std::accumulate(d.begin(), d.end(), 0.0)) <= 1e-12);
    for (int j = 0; j < g.basis_count(); ++j) {
      auto bj = [&](double xx) {
        std::vector<double> v(g.basis_count());
        bspline_basis(g, xx, v);
        return v[static_cast<std::size_t>(j)];
      };
      const double fd = oracles::central_diff(bj, x);
      CHECK(std::abs(d[static_cast<std::size_t>(j)] - fd) <= 1e-7);
    }
  }
}

TEST_CASE("second derivatives match finite differences of the first") {
  Rng rng(15);
  SplineGrid g = SplineGrid::uniform(-1.0, 1.0, 4, 3);
  std::vector<double> d2(g.basis_count());
  for (int trial = 0; trial < 30; ++trial) {
    const double x = rng.uniform(-1.0, 1.0);
    bspline_basis_all(g, x, 2, d2);
    for (int j = 0; j < g.basis_count(); ++j) {
      auto dj = [&](double xx) {
        std::vector<double> v(g.basis_count());
        bspline_basis_derivative(g, xx, v);
        return v[static_cast<std::size_t>(j)];
      };
      const double fd = oracles::central_diff(dj, x);
      CHECK(std::abs(d2[static_cast<std::size_t>(j)] - fd) <= 1e-6);
    }
  }
}

TEST_CASE("degree zero refuses derivatives") {
  SplineGrid g = SplineGrid::uniform(0.0, 1.0, 4, 0);
  std::vector<double> d(g.basis_count());
  CHECK_THROWS_AS(bspline_basis_derivative(g, 0.5, d), DegreeError);
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(SplineGrid::uniform(1.0, 1.0, 2, 3), UsageError);
  CHECK_THROWS_AS(SplineGrid::uniform(0.0, 1.0, 0, 3), UsageError);
  CHECK_THROWS_AS(SplineGrid::uniform(0.0, 1.0, 2, -1), UsageError);
}

TEST_CASE("spline span reproduces polynomials up to the degree") {
  // least-squares fit of a cubic polynomial on a cubic grid must be exact
  SplineGrid g = SplineGrid::uniform(-2.0, 1.0, 7, 3);
  auto poly = [](double x) { return 0.3 * x * x * x - x * x + 0.5 * x + 2.0; };

  const int n = g.basis_count();
  const int m = 120;
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(n),
                                        std::vector<double>(m));
  std::vector<double> y(m);
  std::vector<double> row(static_cast<std::size_t>(n));
  for (int r = 0; r < m; ++r) {
    const double x = -2.0 + 3.0 * r / (m - 1);
    bspline_basis(g, x, row);
    for (int j = 0; j < n; ++j) cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)] = row[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(r)] = poly(x);
  }
  std::vector<double> c = oracles::least_squares(cols, y);

  Rng rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    const double x = rng.uniform(-2.0, 1.0);
    bspline_basis(g, x, row);
    double fit = 0.0;
    for (int j = 0; j < n; ++j) fit += c[static_cast<std::size_t>(j)] * row[static_cast<std::size_t>(j)];
    CHECK(std::abs(fit - poly(x)) <= 1e-10);
  }
}

namespace {

// Edge value through a fresh non-recording tape, as a plain function of x.
double edge_value(const UnivariateEdge& e, const ad::ParameterStore& store,
                  double x) {
  ad::Tape tape(&store);
  ad::Var xv = tape.input(x);
  return tape.value(e.eval(tape, xv));
}

double edge_slope(const UnivariateEdge& e, const ad::ParameterStore& store,
                  double x) {
  ad::Tape tape(&store);
  ad::Var xv = tape.input(x);
  return tape.value(e.eval_derivative(tape, xv));
}

}  // namespace

TEST_CASE("edge value agrees with the definition") {
  Rng rng(21);
  ad::ParameterStore store;
  SplineGrid g = SplineGrid::uniform(-1.0, 1.5, 3, 3);
  UnivariateEdge e = UnivariateEdge::create(store, "e", g, rng);

  for (int trial = 0; trial < 30; ++trial) {
    const double x = rng.uniform(-1.0, 1.5);
    std::vector<double> row(static_cast<std::size_t>(g.basis_count()));
    bspline_basis(g, x, row);
    double splinepart = 0.0;
    for (int j = 0; j < g.basis_count(); ++j)
      splinepart += store[e.coeff_offset() + static_cast<std::size_t>(j)] * row[static_cast<std::size_t>(j)];
    const double want = store[e.w_base_offset()] * (x / (1.0 + std::exp(-x))) +
                        store[e.w_spline_offset()] * splinepart;
    CHECK(edge_value(e, store, x) == doctest::Approx(want).epsilon(1e-13));
  }
}

TEST_CASE("edge derivative matches finite differences everywhere") {
  Rng rng(22);
  ad::ParameterStore store;
  SplineGrid g = SplineGrid::uniform(-0.8, 1.2, 2, 3);
  UnivariateEdge e = UnivariateEdge::create(store, "e", g, rng);
  // make the spline part count: exaggerate a few coefficients
  for (int j = 0; j < g.basis_count(); ++j)
    store[e.coeff_offset() + static_cast<std::size_t>(j)] = rng.uniform(-1.0, 1.0);

  for (int trial = 0; trial < 60; ++trial) {
    // half in-domain, half in the extension region
    const double x = trial % 2 == 0 ? rng.uniform(-0.8, 1.2)
                                    : rng.uniform(-4.0, 4.0);
    const double got = edge_slope(e, store, x);
    const double fd = oracles::central_diff(
        [&](double xx) { return edge_value(e, store, xx); }, x);
    CHECK(oracles::rel_err(got, fd) <= 1e-6);
  }
}

TEST_CASE("linear continuation is C1 at both boundaries") {
  Rng rng(23);
  ad::ParameterStore store;
  SplineGrid g = SplineGrid::uniform(-1.0, 1.0, 4, 3);
  UnivariateEdge e = UnivariateEdge::create(store, "e", g, rng);

  for (double boundary : {-1.0, 1.0}) {
    const double inside = edge_value(e, store, boundary);
    const double slope_in = edge_slope(e, store, boundary);
    // nudge into the extension region
    const double out_x = boundary + (boundary > 0 ? 1e-9 : -1e-9);
    const double outside = edge_value(e, store, out_x);
    const double slope_out = edge_slope(e, store, out_x);
    CHECK(std::abs(outside - (inside + (out_x - boundary) * slope_in)) <= 1e-12);
    CHECK(std::abs(slope_out - slope_in) <= 1e-12);
  }

  // far out: phi(b + t) = phi(b) + t*phi'(b) exactly
  const double t = 2.75;
  CHECK(edge_value(e, store, 1.0 + t) ==
        doctest::Approx(edge_value(e, store, 1.0) + t * edge_slope(e, store, 1.0))
            .epsilon(1e-13));
}

TEST_CASE("edge parameter gradients match finite differences") {
  Rng rng(24);
  ad::ParameterStore store;
  SplineGrid g = SplineGrid::uniform(-1.0, 1.0, 2, 5);
  UnivariateEdge e = UnivariateEdge::create(store, "e", g, rng);

  for (double x : {0.37, -0.99, 1.0, 2.5, -3.1}) {  // in-domain and outside
    ad::Tape tape(&store);
    ad::Var root = e.eval(tape, tape.input(x));
    tape.forward(root);
    std::vector<double> grad = tape.backward(root);

    auto value_at = [&](std::span<const double> theta) {
      ad::ParameterStore tmp = store;
      for (std::size_t i = 0; i < theta.size(); ++i) tmp[i] = theta[i];
      ad::Tape tp(&tmp);
      return tp.value(e.eval(tp, tp.input(x)));
    };
    std::vector<double> want = oracles::fd_gradient(value_at, store.values());
    for (std::size_t i = 0; i < store.size(); ++i)
      CHECK(oracles::rel_err(grad[i], want[i]) <= 1e-6);
  }
}

TEST_CASE("derivative-node parameter gradients match finite differences") {
  Rng rng(25);
  ad::ParameterStore store;
  SplineGrid g = SplineGrid::uniform(-1.2, 0.9, 3, 3);
  UnivariateEdge e = UnivariateEdge::create(store, "e", g, rng);

  for (double x : {0.11, -1.0, 1.5}) {
    ad::Tape tape(&store);
    ad::Var root = e.eval_derivative(tape, tape.input(x));
    tape.forward(root);
    std::vector<double> grad = tape.backward(root);

    auto value_at = [&](std::span<const double> theta) {
      ad::ParameterStore tmp = store;
      for (std::size_t i = 0; i < theta.size(); ++i) tmp[i] = theta[i];
      ad::Tape tp(&tmp);
      return tp.value(e.eval_derivative(tp, tp.input(x)));
    };
    std::vector<double> want = oracles::fd_gradient(value_at, store.values());
    for (std::size_t i = 0; i < store.size(); ++i)
      CHECK(oracles::rel_err(grad[i], want[i]) <= 1e-6);
  }
}

TEST_CASE("coefficient initialization has the pinned spread") {
  Rng rng(26);
  ad::ParameterStore store;
  SplineGrid g = SplineGrid::uniform(-1.0, 1.0, 5, 3);
  double sum = 0.0, sumsq = 0.0;
  const int edges = 400;
  for (int i = 0; i < edges; ++i) {
    UnivariateEdge e = UnivariateEdge::create(store, "e" + std::to_string(i), g, rng);
    CHECK(store[e.w_base_offset()] == 1.0);
    CHECK(store[e.w_spline_offset()] == 1.0);
    for (int j = 0; j < g.basis_count(); ++j) {
      const double c = store[e.coeff_offset() + static_cast<std::size_t>(j)];
      sum += c;
      sumsq += c * c;
    }
  }
  const int n = edges * g.basis_count();
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  const double want_sd = 0.1 / std::sqrt(static_cast<double>(g.basis_count()));
  CHECK(std::abs(mean) < 0.01);
  CHECK(var == doctest::Approx(want_sd * want_sd).epsilon(0.15));
}
