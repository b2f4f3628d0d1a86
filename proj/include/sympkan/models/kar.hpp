#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sympkan/ad/parameter_store.hpp"
#include "sympkan/ad/tape.hpp"
#include "sympkan/spline/edge.hpp"

namespace sympkan::models {

struct KarOptions {
  std::vector<int> widths;            // e.g. {2, 2, 1}
  int grid_intervals = 2;
  int degree = 3;
  std::vector<double> input_domains;  // per input coordinate: halfwidth of [-d, d]
  double hidden_halfwidth = 3.0;      // spline domain for hidden-layer edges
};

// Sum-of-splines network: every edge is a univariate spline + silu mix, a
// unit's output is the sum of its incoming edges. Scalar output evaluates a
// Hamiltonian; input_gradient lays the exact per-edge chain rule onto the
// tape so the result stays differentiable in all edge parameters.
class KarHamiltonian {
 public:
  KarHamiltonian(KarOptions opts, std::uint64_t seed);

  ad::Var eval(ad::Tape& tape, std::span<const ad::Var> x) const;
  std::vector<ad::Var> input_gradient(ad::Tape& tape,
                                      std::span<const ad::Var> x) const;

  ad::ParameterStore& params() { return store_; }
  const ad::ParameterStore& params() const { return store_; }
  const KarOptions& options() const { return opts_; }
  int input_dim() const { return opts_.widths.front(); }

  const spline::UnivariateEdge& edge(std::size_t layer, int in_unit,
                                     int out_unit) const;

 private:
  struct EdgeLayer {
    int in = 0;
    int out = 0;
    std::vector<spline::UnivariateEdge> edges;  // row-major: [out][in]
  };

  void check_input(std::span<const ad::Var> x) const;
  std::vector<std::vector<ad::Var>> run_layers(ad::Tape& tape,
                                               std::span<const ad::Var> x) const;

  KarOptions opts_;
  std::vector<EdgeLayer> layers_;
  ad::ParameterStore store_;
};

}  // namespace sympkan::models
