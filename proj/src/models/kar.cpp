#include "sympkan/models/kar.hpp"

#include <string>
#include <utility>

#include "sympkan/errors.hpp"
#include "sympkan/rng.hpp"
#include "sympkan/spline/bspline.hpp"

namespace sympkan::models {

KarHamiltonian::KarHamiltonian(KarOptions opts, std::uint64_t seed)
    : opts_(std::move(opts)) {
  if (opts_.widths.size() < 2)
    throw UsageError("spline network needs input and output widths");
  for (int w : opts_.widths)
    if (w < 1) throw UsageError("spline network widths must be positive");
  if (opts_.widths.back() != 1)
    throw UsageError("spline network output must be scalar");
  if (opts_.input_domains.size() !=
      static_cast<std::size_t>(opts_.widths.front()))
    throw ShapeError("expected one input domain per input coordinate");
  for (double d : opts_.input_domains)
    if (!(d > 0.0)) throw UsageError("input domain halfwidths must be positive");
  if (!(opts_.hidden_halfwidth > 0.0))
    throw UsageError("hidden halfwidth must be positive");

  Rng rng(seed);
  std::uint64_t stream = 0;
  for (std::size_t l = 0; l + 1 < opts_.widths.size(); ++l) {
    EdgeLayer layer;
    layer.in = opts_.widths[l];
    layer.out = opts_.widths[l + 1];
    layer.edges.reserve(static_cast<std::size_t>(layer.in) * layer.out);
    for (int j = 0; j < layer.out; ++j) {
      for (int s = 0; s < layer.in; ++s) {
        const double hw = l == 0 ? opts_.input_domains[static_cast<std::size_t>(s)]
                                 : opts_.hidden_halfwidth;
        auto grid = spline::SplineGrid::uniform(-hw, hw, opts_.grid_intervals,
                                                opts_.degree);
        const std::string name = "l" + std::to_string(l) + ".e" +
                                 std::to_string(j) + "_" + std::to_string(s);
        Rng er = rng.child(stream++);
        layer.edges.push_back(
            spline::UnivariateEdge::create(store_, name, grid, er));
      }
    }
    layers_.push_back(std::move(layer));
  }
  store_.freeze();
}

const spline::UnivariateEdge& KarHamiltonian::edge(std::size_t layer,
                                                   int in_unit,
                                                   int out_unit) const {
  const EdgeLayer& ly = layers_.at(layer);
  return ly.edges[static_cast<std::size_t>(out_unit) * ly.in + in_unit];
}

void KarHamiltonian::check_input(std::span<const ad::Var> x) const {
  if (static_cast<int>(x.size()) != opts_.widths.front())
    throw ShapeError("spline network expects " +
                     std::to_string(opts_.widths.front()) + " inputs, got " +
                     std::to_string(x.size()));
}

std::vector<std::vector<ad::Var>> KarHamiltonian::run_layers(
    ad::Tape& tape, std::span<const ad::Var> x) const {
  std::vector<std::vector<ad::Var>> acts;
  acts.reserve(layers_.size() + 1);
  acts.emplace_back(x.begin(), x.end());
  for (const EdgeLayer& ly : layers_) {
    std::vector<ad::Var> next(static_cast<std::size_t>(ly.out));
    for (int j = 0; j < ly.out; ++j) {
      ad::Var acc{};
      for (int s = 0; s < ly.in; ++s) {
        ad::Var e = ly.edges[static_cast<std::size_t>(j) * ly.in + s].eval(
            tape, acts.back()[static_cast<std::size_t>(s)]);
        acc = s == 0 ? e : ad::add(acc, e);
      }
      next[static_cast<std::size_t>(j)] = acc;
    }
    acts.push_back(std::move(next));
  }
  return acts;
}

ad::Var KarHamiltonian::eval(ad::Tape& tape, std::span<const ad::Var> x) const {
  check_input(x);
  return run_layers(tape, x).back().front();
}

std::vector<ad::Var> KarHamiltonian::input_gradient(
    ad::Tape& tape, std::span<const ad::Var> x) const {
  check_input(x);
  auto acts = run_layers(tape, x);

  // g[j] = d(output)/d(unit j of the layer below the one being swept).
  // Top layer: d(out)/d(h_s) = sum over output units of edge'(h_s), and the
  // output is a single unit, so no multiplier is needed.
  std::vector<ad::Var> g;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const EdgeLayer& ly = layers_[l];
    const std::vector<ad::Var>& in_acts = acts[l];
    std::vector<ad::Var> dg(static_cast<std::size_t>(ly.in));
    for (int s = 0; s < ly.in; ++s) {
      ad::Var acc{};
      for (int j = 0; j < ly.out; ++j) {
        ad::Var de = ly.edges[static_cast<std::size_t>(j) * ly.in + s]
                         .eval_derivative(tape, in_acts[static_cast<std::size_t>(s)]);
        ad::Var term = l + 1 == layers_.size()
                           ? de
                           : ad::mul(g[static_cast<std::size_t>(j)], de);
        acc = j == 0 ? term : ad::add(acc, term);
      }
      dg[static_cast<std::size_t>(s)] = acc;
    }
    g = std::move(dg);
  }
  return g;
}

}  // namespace sympkan::models
