#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sympkan/ad/parameter_store.hpp"
#include "sympkan/ad/tape.hpp"

namespace sympkan::models {

// Dense tanh network: linear output layer, tanh on every hidden layer.
// Weights are stored row-major per layer, biases after them, so dense layers
// and their transposed gradient sweeps map onto the tape's fused affine op.
class FeedForward {
 public:
  FeedForward(std::vector<int> widths, std::uint64_t seed);

  // Builds graph nodes for the outputs. The input nodes must sit
  // contiguously on the tape (create them together, in order).
  std::vector<ad::Var> forward(ad::Tape& tape,
                               std::span<const ad::Var> x) const;

  // d(output)/d(x_s) as live graph nodes; only for scalar-output networks.
  // The chain rule is laid down explicitly: transposed affine sweeps against
  // 1 - h^2 factors, so the result stays differentiable in the parameters.
  std::vector<ad::Var> input_gradient(ad::Tape& tape,
                                      std::span<const ad::Var> x) const;

  ad::ParameterStore& params() { return store_; }
  const ad::ParameterStore& params() const { return store_; }
  const std::vector<int>& widths() const { return widths_; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }

  // Offsets for tests and the serializer.
  std::size_t weight_offset(std::size_t layer) const { return layers_[layer].w; }
  std::size_t bias_offset(std::size_t layer) const { return layers_[layer].b; }

 private:
  struct Layer {
    std::size_t w = 0;
    std::size_t b = 0;
    int in = 0;
    int out = 0;
  };

  void check_input(std::span<const ad::Var> x) const;

  std::vector<int> widths_;
  std::vector<Layer> layers_;
  ad::ParameterStore store_;
};

}  // namespace sympkan::models
