#pragma once

// Independent numerical oracles used by the tests. These are deliberately
// written from the textbook definitions and share no code with the library.

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace oracles {

inline double central_diff(const std::function<double(double)>& f, double x,
                           double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Central-difference gradient of a scalar function of a parameter vector.
inline std::vector<double> fd_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> theta, double h = 1e-5) {
  std::vector<double> x(theta.begin(), theta.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double fp = f(x);
    x[i] = saved - h;
    const double fm = f(x);
    x[i] = saved;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Relative error with a unit floor in the denominator, the convention used
// throughout the gradient checks.
inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1.0);
}

// Naive Cox-de Boor recursion straight from the definition. `knots` must be
// nondecreasing; returns B_{i,k}(x).
inline double bspline_recursive(std::span<const double> knots, std::size_t i,
                                int k, double x) {
  if (k == 0) {
    return (knots[i] <= x && x < knots[i + 1]) ? 1.0 : 0.0;
  }
  double left = 0.0, right = 0.0;
  const double dl = knots[i + k] - knots[i];
  if (dl > 0.0) left = (x - knots[i]) / dl * bspline_recursive(knots, i, k - 1, x);
  const double dr = knots[i + k + 1] - knots[i + 1];
  if (dr > 0.0)
    right = (knots[i + k + 1] - x) / dr * bspline_recursive(knots, i + 1, k - 1, x);
  return left + right;
}

// Ordinary least squares via normal equations with Gaussian elimination;
// columns of A are the regressors. Small systems only.
inline std::vector<double> least_squares(const std::vector<std::vector<double>>& cols,
                                         std::span<const double> y) {
  const std::size_t n = cols.size();
  std::vector<std::vector<double>> m(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t r = 0; r < y.size(); ++r) m[a][b] += cols[a][r] * cols[b][r];
    for (std::size_t r = 0; r < y.size(); ++r) m[a][n] += cols[a][r] * y[r];
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    std::swap(m[c], m[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || m[c][c] == 0.0) continue;
      const double f = m[r][c] / m[c][c];
      for (std::size_t b = c; b <= n; ++b) m[r][b] -= f * m[c][b];
    }
  }
  std::vector<double> beta(n, 0.0);
  for (std::size_t c = 0; c < n; ++c)
    if (m[c][c] != 0.0) beta[c] = m[c][n] / m[c][c];
  return beta;
}

}  // namespace oracles
