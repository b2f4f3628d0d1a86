#include "sympkan/models/feedforward.hpp"

#include <cmath>
#include <string>

#include "sympkan/errors.hpp"
#include "sympkan/rng.hpp"

namespace sympkan::models {

FeedForward::FeedForward(std::vector<int> widths, std::uint64_t seed)
    : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw UsageError("network needs input and output widths");
  for (int w : widths_)
    if (w < 1) throw UsageError("network widths must be positive");

  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    Layer layer;
    layer.in = widths_[l];
    layer.out = widths_[l + 1];
    const std::string tag = "layer" + std::to_string(l);
    layer.w = store_.allocate(tag + ".w",
                              static_cast<std::size_t>(layer.in) * layer.out);
    layer.b = store_.allocate(tag + ".b", static_cast<std::size_t>(layer.out));
    Rng lr = rng.child(l);
    const double sd = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (int i = 0; i < layer.in * layer.out; ++i)
      store_[layer.w + static_cast<std::size_t>(i)] = lr.normal(0.0, sd);
    // biases start at zero
    layers_.push_back(layer);
  }
  store_.freeze();
}

void FeedForward::check_input(std::span<const ad::Var> x) const {
  if (static_cast<int>(x.size()) != widths_.front())
    throw ShapeError("network expects " + std::to_string(widths_.front()) +
                     " inputs, got " + std::to_string(x.size()));
  for (std::size_t i = 1; i < x.size(); ++i)
    if (x[i].id != x[0].id + static_cast<std::int32_t>(i))
      throw UsageError("network inputs must be contiguous tape nodes");
}

std::vector<ad::Var> FeedForward::forward(ad::Tape& tape,
                                          std::span<const ad::Var> x) const {
  check_input(x);
  ad::Var block = x.front();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& ly = layers_[l];
    ad::Var pre{};
    for (int j = 0; j < ly.out; ++j) {
      ad::Var a = tape.affine(ly.w + static_cast<std::size_t>(j) * ly.in, 1,
                              static_cast<std::size_t>(ly.in), block,
                              static_cast<std::ptrdiff_t>(ly.b + j));
      if (j == 0) pre = a;
    }
    if (l + 1 < layers_.size()) {
      ad::Var act{};
      for (int j = 0; j < ly.out; ++j) {
        ad::Var h = ad::tanh(ad::Var{&tape, pre.id + j});
        if (j == 0) act = h;
      }
      block = act;
    } else {
      block = pre;
    }
  }
  std::vector<ad::Var> out;
  out.reserve(static_cast<std::size_t>(widths_.back()));
  for (int j = 0; j < widths_.back(); ++j)
    out.push_back(ad::Var{&tape, block.id + j});
  return out;
}

std::vector<ad::Var> FeedForward::input_gradient(
    ad::Tape& tape, std::span<const ad::Var> x) const {
  if (widths_.back() != 1)
    throw UsageError("input gradient requires a scalar-output network");
  check_input(x);

  // forward pass, remembering each hidden activation block
  std::vector<ad::Var> act_start(layers_.size());  // tanh block per hidden layer
  ad::Var block = x.front();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& ly = layers_[l];
    ad::Var pre{};
    for (int j = 0; j < ly.out; ++j) {
      ad::Var a = tape.affine(ly.w + static_cast<std::size_t>(j) * ly.in, 1,
                              static_cast<std::size_t>(ly.in), block,
                              static_cast<std::ptrdiff_t>(ly.b + j));
      if (j == 0) pre = a;
    }
    if (l + 1 < layers_.size()) {
      ad::Var act{};
      for (int j = 0; j < ly.out; ++j) {
        ad::Var h = ad::tanh(ad::Var{&tape, pre.id + j});
        if (j == 0) act = h;
      }
      act_start[l] = act;
      block = act;
    }
  }

  // backward sweep as fresh graph nodes. g holds d(out)/d(pre-activation)
  // of the layer above as a contiguous block; the output layer's gradient
  // is 1, so its sweep reduces to plain parameter leaves.
  ad::Var g{};
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& ly = layers_[l];
    // dH/dh_{l} = W_{l+1}^T g  (column walk, stride = in width)
    ad::Var dh{};
    if (l + 1 == layers_.size()) {
      for (int i = 0; i < ly.in; ++i) {
        ad::Var leaf = tape.param(ly.w + static_cast<std::size_t>(i));
        if (i == 0) dh = leaf;
      }
    } else {
      for (int i = 0; i < ly.in; ++i) {
        ad::Var a = tape.affine(ly.w + static_cast<std::size_t>(i),
                                static_cast<std::size_t>(ly.in),
                                static_cast<std::size_t>(ly.out), g, -1);
        if (i == 0) dh = a;
      }
    }
    if (l == 0) {
      std::vector<ad::Var> out;
      out.reserve(static_cast<std::size_t>(ly.in));
      for (int i = 0; i < ly.in; ++i)
        out.push_back(ad::Var{&tape, dh.id + i});
      return out;
    }
    // dH/da_{l-1} = dh * (1 - h^2), built in contiguous blocks
    const int n = ly.in;
    ad::Var h0 = act_start[l - 1];
    ad::Var sq{};
    for (int i = 0; i < n; ++i) {
      ad::Var s = ad::square(ad::Var{&tape, h0.id + i});
      if (i == 0) sq = s;
    }
    ad::Var om{};
    for (int i = 0; i < n; ++i) {
      ad::Var o = ad::sub_from_const(1.0, ad::Var{&tape, sq.id + i});
      if (i == 0) om = o;
    }
    ad::Var gm{};
    for (int i = 0; i < n; ++i) {
      ad::Var m = ad::mul(ad::Var{&tape, dh.id + i}, ad::Var{&tape, om.id + i});
      if (i == 0) gm = m;
    }
    g = gm;
  }
  throw UsageError("network has no layers");
}

}  // namespace sympkan::models
