#include "sympkan/spline/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sympkan::spline {

SplineGrid SplineGrid::uniform(double a, double b, int intervals, int degree) {
  if (!(a < b))
    throw UsageError("spline grid needs a < b");
  if (intervals < 1) throw UsageError("spline grid needs at least 1 interval");
  if (degree < 0) throw UsageError("spline degree must be >= 0");
  SplineGrid g;
  g.a = a;
  g.b = b;
  g.intervals = intervals;
  g.degree = degree;
  const double h = (b - a) / intervals;
  g.knots.resize(static_cast<std::size_t>(intervals + 2 * degree + 1));
  for (int i = 0; i < static_cast<int>(g.knots.size()); ++i) {
    const int j = i - degree;  // 0 at a, `intervals` at b
    // anchor the extension rows on the exact endpoints so t[degree] == a
    // and t[degree + intervals] == b bit for bit
    g.knots[static_cast<std::size_t>(i)] =
        j <= 0 ? a + j * h : (j >= intervals ? b + (j - intervals) * h : a + j * h);
  }
  return g;
}

namespace {

// Iterative Cox-de Boor pyramid up to `upto_degree`, then `order`
// differentiation passes of the degree-lowering formula. `work` must have
// room for the degree-0 row (knots-1 entries).
void pyramid(const SplineGrid& grid, double x, int order,
             std::span<double> out, std::span<double> work) {
  const std::vector<double>& t = grid.knots;
  const int n_knots = static_cast<int>(t.size());
  const int k = grid.degree;
  const int low = k - order;  // degree of the seed row after raising

  // degree 0 row: half-open indicators, except that x == b seeds the last
  // domain interval (and only that one) so the right endpoint is covered.
  const int last_domain = grid.intervals + k - 1;  // index of [.., b)
  const double right_knot = t[static_cast<std::size_t>(last_domain + 1)];
  int count = n_knots - 1;
  for (int j = 0; j < count; ++j) {
    bool inside;
    if (x == right_knot)
      inside = j == last_domain;
    else
      inside = t[j] <= x && x < t[j + 1];
    work[j] = inside ? 1.0 : 0.0;
  }

  // raise to degree `low` with the value recursion
  for (int d = 1; d <= low; ++d) {
    --count;
    for (int j = 0; j < count; ++j) {
      double v = 0.0;
      const double dl = t[j + d] - t[j];
      if (dl > 0.0) v += (x - t[j]) / dl * work[j];
      const double dr = t[j + d + 1] - t[j + 1];
      if (dr > 0.0) v += (t[j + d + 1] - x) / dr * work[j + 1];
      work[j] = v;
    }
  }

  // differentiation passes: degree low -> k
  for (int d = low + 1; d <= k; ++d) {
    --count;
    for (int j = 0; j < count; ++j) {
      double v = 0.0;
      const double dl = t[j + d] - t[j];
      if (dl > 0.0) v += work[j] / dl;
      const double dr = t[j + d + 1] - t[j + 1];
      if (dr > 0.0) v -= work[j + 1] / dr;
      work[j] = d * v;
    }
  }

  for (int j = 0; j < grid.basis_count(); ++j) out[j] = work[j];
}

}  // namespace

void bspline_basis_all(const SplineGrid& grid, double x, int order,
                       std::span<double> out) {
  if (order < 0) throw UsageError("derivative order must be >= 0");
  if (order >= 1 && grid.degree == 0)
    throw DegreeError("degree-0 splines have no derivative");
  if (out.size() < static_cast<std::size_t>(grid.basis_count()))
    throw UsageError("basis output span too small");
  if (order > grid.degree) {
    std::fill(out.begin(), out.begin() + grid.basis_count(), 0.0);
    return;
  }
  static thread_local std::vector<double> work;
  work.assign(grid.knots.size() - 1, 0.0);
  pyramid(grid, x, order, out, work);
}

void bspline_basis(const SplineGrid& grid, double x, std::span<double> out) {
  bspline_basis_all(grid, x, 0, out);
}

void bspline_basis_derivative(const SplineGrid& grid, double x,
                              std::span<double> out) {
  bspline_basis_all(grid, x, 1, out);
}

}  // namespace sympkan::spline
