#pragma once

#include <string>

#include "sympkan/ad/parameter_store.hpp"
#include "sympkan/ad/tape.hpp"
#include "sympkan/rng.hpp"
#include "sympkan/spline/bspline.hpp"

namespace sympkan::spline {

// One learnable univariate function
//
//   phi(x) = w_b * silu(x) + w_s * sum_j c_j B_j(x)
//
// on a fixed grid. Outside [a, b] the whole of phi is continued linearly
// from the nearest boundary with the boundary slope, so the edge stays C^1:
// phi(b + t) = phi(b) + t * phi'(b), and likewise at a.
//
// Both eval and eval_derivative build graph nodes, so their outputs can be
// differentiated with respect to the parameters; the derivative node's own
// dependence on x is wired through the second-order basis values.
class UnivariateEdge {
 public:
  // Allocates and initializes this edge's parameters:
  // c_j ~ Normal(0, 0.1/sqrt(basis_count)), w_b = 1, w_s = 1.
  static UnivariateEdge create(ad::ParameterStore& store,
                               const std::string& name, SplineGrid grid,
                               Rng& rng);

  ad::Var eval(ad::Tape& tape, ad::Var x) const;
  ad::Var eval_derivative(ad::Tape& tape, ad::Var x) const;

  const SplineGrid& grid() const { return grid_; }
  std::size_t coeff_offset() const { return coeff_; }
  std::size_t w_base_offset() const { return wb_; }
  std::size_t w_spline_offset() const { return ws_; }

 private:
  // Spline part at a boundary point as a node (no live x dependence).
  ad::Var combo_at(ad::Tape& tape, double xc, int order) const;

  SplineGrid grid_;
  std::size_t coeff_ = 0;
  std::size_t wb_ = 0;
  std::size_t ws_ = 0;
};

}  // namespace sympkan::spline
