#include "sympkan/spline/edge.hpp"

#include <cmath>
#include <vector>

namespace sympkan::spline {

UnivariateEdge UnivariateEdge::create(ad::ParameterStore& store,
                                      const std::string& name, SplineGrid grid,
                                      Rng& rng) {
  UnivariateEdge e;
  const int n = grid.basis_count();
  e.grid_ = std::move(grid);
  e.coeff_ = store.allocate(name + ".c", static_cast<std::size_t>(n));
  e.wb_ = store.allocate(name + ".wb", 1);
  e.ws_ = store.allocate(name + ".ws", 1);
  const double sd = 0.1 / std::sqrt(static_cast<double>(n));
  for (int j = 0; j < n; ++j) store[e.coeff_ + j] = rng.normal(0.0, sd);
  store[e.wb_] = 1.0;
  store[e.ws_] = 1.0;
  return e;
}

namespace {

thread_local std::vector<double> basis_buf;
thread_local std::vector<double> deriv_buf;

}  // namespace

ad::Var UnivariateEdge::combo_at(ad::Tape& tape, double xc, int order) const {
  basis_buf.resize(static_cast<std::size_t>(grid_.basis_count()));
  bspline_basis_all(grid_, xc, order, basis_buf);
  return tape.spline_combo(coeff_, basis_buf, ad::Var{}, 0.0);
}

ad::Var UnivariateEdge::eval(ad::Tape& tape, ad::Var x) const {
  const double xv = tape.value(x);
  const int n = grid_.basis_count();
  if (xv >= grid_.a && xv <= grid_.b) {
    basis_buf.resize(static_cast<std::size_t>(n));
    bspline_basis_all(grid_, xv, 0, basis_buf);
    double px = 0.0;
    if (tape.recording() && grid_.degree >= 1) {
      deriv_buf.resize(static_cast<std::size_t>(n));
      bspline_basis_all(grid_, xv, 1, deriv_buf);
      const double* c = tape.store()->data() + coeff_;
      for (int j = 0; j < n; ++j) px += c[j] * deriv_buf[j];
    }
    ad::Var combo = tape.spline_combo(coeff_, basis_buf, x, px);
    return ad::fma2(tape.param(wb_), ad::silu(x), tape.param(ws_), combo);
  }

  // linear continuation from the nearest boundary
  const double xc = xv < grid_.a ? grid_.a : grid_.b;
  const double s = xc / (1.0 + std::exp(-xc));
  const double sg = 1.0 / (1.0 + std::exp(-xc));
  const double sp = sg * (1.0 + xc * (1.0 - sg));
  ad::Var wb = tape.param(wb_);
  ad::Var ws = tape.param(ws_);
  ad::Var at_boundary =
      ad::fma2(wb, tape.constant(s), ws, combo_at(tape, xc, 0));
  ad::Var slope = ad::fma2(wb, tape.constant(sp), ws, combo_at(tape, xc, 1));
  return at_boundary + ad::add_const(x, -xc) * slope;
}

ad::Var UnivariateEdge::eval_derivative(ad::Tape& tape, ad::Var x) const {
  const double xv = tape.value(x);
  const int n = grid_.basis_count();
  if (xv >= grid_.a && xv <= grid_.b) {
    deriv_buf.resize(static_cast<std::size_t>(n));
    bspline_basis_all(grid_, xv, 1, deriv_buf);
    double px = 0.0;
    if (tape.recording()) {
      basis_buf.resize(static_cast<std::size_t>(n));
      bspline_basis_all(grid_, xv, 2, basis_buf);
      const double* c = tape.store()->data() + coeff_;
      for (int j = 0; j < n; ++j) px += c[j] * basis_buf[j];
    }
    ad::Var combo = tape.spline_combo(coeff_, deriv_buf, x, px);
    return ad::fma2(tape.param(wb_), ad::silu_prime(x), tape.param(ws_),
                    combo);
  }

  // the continuation is linear, so the derivative is the boundary slope
  const double xc = xv < grid_.a ? grid_.a : grid_.b;
  const double sg = 1.0 / (1.0 + std::exp(-xc));
  const double sp = sg * (1.0 + xc * (1.0 - sg));
  return ad::fma2(tape.param(wb_), tape.constant(sp), tape.param(ws_),
                  combo_at(tape, xc, 1));
}

}  // namespace sympkan::spline
