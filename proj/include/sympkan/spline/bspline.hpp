#pragma once

#include <span>
#include <vector>

#include "sympkan/errors.hpp"

namespace sympkan::spline {

// Uniform B-spline grid: `intervals` knot spans of equal width cover
// [a, b], extended by `degree` spans on each side so every basis function
// has its full support. Knot count is intervals + 2*degree + 1 and the
// basis has intervals + degree functions.
struct SplineGrid {
  double a = 0.0;
  double b = 1.0;
  int intervals = 1;
  int degree = 0;
  std::vector<double> knots;

  static SplineGrid uniform(double a, double b, int intervals, int degree);

  int basis_count() const { return intervals + degree; }
  double spacing() const { return (b - a) / intervals; }
};

// Values of all basis functions at x, written to `out` (basis_count() slots).
// Points outside [a, b] are evaluated literally against the extended knots;
// beyond those every function is zero.
void bspline_basis(const SplineGrid& grid, double x, std::span<double> out);

// First derivatives of all basis functions at x. degree == 0 is an error.
void bspline_basis_derivative(const SplineGrid& grid, double x,
                              std::span<double> out);

// Derivative of arbitrary order (order 0 = values). Orders above the degree
// are identically zero except that order >= 1 with degree 0 is refused.
void bspline_basis_all(const SplineGrid& grid, double x, int order,
                       std::span<double> out);

}  // namespace sympkan::spline
