#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "sympkan/ad/parameter_store.hpp"
#include "sympkan/errors.hpp"

namespace sympkan::ad {

class Tape;

// Lightweight handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  std::int32_t id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
};

enum class Op : std::uint8_t {
  kConst,
  kInput,
  kParam,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kSin,
  kCos,
  kExp,
  kLog,
  kSqrt,
  kTanh,
  kSigmoid,
  kSilu,
  kSiluPrime,
  kSquare,
  kScale,
  kAddConst,
  kSubFromConst,
  kSum,
  kFma2,
  kAffine,
  kSplineCombo,
};

const char* op_name(Op op);

// Scalar reverse-mode tape. Nodes are created eagerly: the value and the
// local partial derivatives with respect to the parents are computed at
// emission time, so backward() is a single reverse sweep that never
// re-evaluates math. One tape holds one computation graph; graphs are cheap
// and rebuilt per batch, reset() keeps the buffers.
//
// Besides generic nodes (explicit parent list + cached partials) there are
// two fused node kinds that keep big models compact:
//   * affine: bias + sum_j theta[pbase + j*stride] * value[node_base + j]
//     over a contiguous run of input nodes, parameters read straight from
//     the store (used for dense layers and their transposed sweeps),
//   * spline combination: sum_j theta[cbase + j] * basis[j](x) with the
//     basis values cached and a single precomputed partial for x.
//
// With recording off, only node values are stored; use that for pure
// evaluation (e.g. inside ODE rollouts) where no gradient is needed.
class Tape {
 public:
  explicit Tape(const ParameterStore* store = nullptr) : store_(store) {}

  const ParameterStore* store() const { return store_; }

  void reset() {
    value_.clear();
    op_.clear();
    a_.clear();
    b_.clear();
    parents_.clear();
    partials_.clear();
    affine_.clear();
    combo_.clear();
    aux_.clear();
    adjoint_.clear();
    forwarded_root_ = -1;
  }

  void set_recording(bool on) { recording_ = on; }
  bool recording() const { return recording_; }

  std::size_t node_count() const { return value_.size(); }
  double value(Var v) const { return value_[static_cast<std::size_t>(v.id)]; }

  // Adjoint of a node after the latest backward(); for inspection in tests.
  double adjoint(Var v) const {
    return adjoint_[static_cast<std::size_t>(v.id)];
  }

  Var constant(double v) { return emit_leaf(Op::kConst, v, 0); }
  Var input(double v) { return emit_leaf(Op::kInput, v, 0); }

  Var param(std::size_t index) {
    if (store_ == nullptr)
      throw UsageError("tape has no parameter store attached");
    if (index >= store_->size())
      throw UsageError("parameter index out of range");
    return emit_leaf(Op::kParam, (*store_)[index],
                     static_cast<std::uint32_t>(index));
  }

  Var emit_generic(Op op, double value, std::initializer_list<Var> parents,
                   std::initializer_list<double> partials) {
    return emit_generic_span(op, value, {parents.begin(), parents.size()},
                             {partials.begin(), partials.size()});
  }

  Var emit_generic_span(Op op, double value, std::span<const Var> parents,
                        std::span<const double> partials);

  // bias + sum_j theta[pbase + j*stride] * value(first_input + j).
  // The input nodes must be contiguous on the tape starting at first_input;
  // pass bias_param < 0 for no bias term.
  Var affine(std::size_t pbase, std::size_t stride, std::size_t n,
             Var first_input, std::ptrdiff_t bias_param);

  // sum_j theta[cbase + j] * basis[j]. `x` is the node the basis values were
  // evaluated at and `partial_x` is d(combination)/dx at that point; pass an
  // invalid Var when the combination does not depend on a live node.
  Var spline_combo(std::size_t cbase, std::span<const double> basis, Var x,
                   double partial_x);

  // Checks every value up to `root` is finite and arms backward().
  // Throws NumericalError naming the first offending node.
  double forward(Var root);

  // Reverse sweep from `root`; returns d(root)/d(theta) over the full store.
  // forward(root) must have been called first on this exact root.
  std::vector<double> backward(Var root);

  // Same, but adds into `grad` (size of the store) instead of allocating.
  void backward_accumulate(Var root, std::span<double> grad);

 private:
  friend struct Var;

  Var emit_leaf(Op op, double value, std::uint32_t a) {
    value_.push_back(value);
    op_.push_back(op);
    a_.push_back(a);
    b_.push_back(0);
    return Var{this, static_cast<std::int32_t>(value_.size() - 1)};
  }

  struct AffineMeta {
    std::uint32_t pbase = 0;
    std::uint32_t stride = 0;
    std::uint32_t n = 0;
    std::uint32_t node_base = 0;
    std::int32_t bias = -1;
  };

  struct ComboMeta {
    std::uint32_t cbase = 0;
    std::uint32_t n = 0;
    std::uint32_t aux_begin = 0;
    std::int32_t x = -1;
    double partial_x = 0.0;
  };

  const ParameterStore* store_ = nullptr;
  bool recording_ = true;

  std::vector<double> value_;
  std::vector<Op> op_;
  std::vector<std::uint32_t> a_;  // generic: parent begin; param: index;
                                  // affine/combo: meta index
  std::vector<std::uint32_t> b_;  // generic: parent count
  std::vector<std::int32_t> parents_;
  std::vector<double> partials_;
  std::vector<AffineMeta> affine_;
  std::vector<ComboMeta> combo_;
  std::vector<double> aux_;
  std::vector<double> adjoint_;
  std::int32_t forwarded_root_ = -1;
};

// ---- generic operation helpers ----

inline Var add(Var x, Var y) {
  Tape& t = *x.tape;
  return t.emit_generic(Op::kAdd, t.value(x) + t.value(y), {x, y}, {1.0, 1.0});
}

inline Var sub(Var x, Var y) {
  Tape& t = *x.tape;
  return t.emit_generic(Op::kSub, t.value(x) - t.value(y), {x, y},
                        {1.0, -1.0});
}

inline Var mul(Var x, Var y) {
  Tape& t = *x.tape;
  return t.emit_generic(Op::kMul, t.value(x) * t.value(y), {x, y},
                        {t.value(y), t.value(x)});
}

inline Var div(Var x, Var y) {
  Tape& t = *x.tape;
  const double vy = t.value(y);
  const double v = t.value(x) / vy;
  return t.emit_generic(Op::kDiv, v, {x, y}, {1.0 / vy, -v / vy});
}

inline Var neg(Var x) {
  Tape& t = *x.tape;
  return t.emit_generic(Op::kNeg, -t.value(x), {x}, {-1.0});
}

inline Var sin(Var x) {
  Tape& t = *x.tape;
  const double v = t.value(x);
  return t.emit_generic(Op::kSin, std::sin(v), {x}, {std::cos(v)});
}

inline Var cos(Var x) {
  Tape& t = *x.tape;
  const double v = t.value(x);
  return t.emit_generic(Op::kCos, std::cos(v), {x}, {-std::sin(v)});
}

inline Var exp(Var x) {
  Tape& t = *x.tape;
  const double v = std::exp(t.value(x));
  return t.emit_generic(Op::kExp, v, {x}, {v});
}

inline Var log(Var x) {
  Tape& t = *x.tape;
  const double v = t.value(x);
  return t.emit_generic(Op::kLog, std::log(v), {x}, {1.0 / v});
}

inline Var sqrt(Var x) {
  Tape& t = *x.tape;
  const double v = std::sqrt(t.value(x));
  return t.emit_generic(Op::kSqrt, v, {x}, {0.5 / v});
}

inline Var tanh(Var x) {
  Tape& t = *x.tape;
  const double v = std::tanh(t.value(x));
  return t.emit_generic(Op::kTanh, v, {x}, {1.0 - v * v});
}

inline double sigmoid_value(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Var sigmoid(Var x) {
  Tape& t = *x.tape;
  const double s = sigmoid_value(t.value(x));
  return t.emit_generic(Op::kSigmoid, s, {x}, {s * (1.0 - s)});
}

// silu(x) = x * sigmoid(x), the smooth base nonlinearity on every edge.
inline Var silu(Var x) {
  Tape& t = *x.tape;
  const double v = t.value(x);
  const double s = sigmoid_value(v);
  return t.emit_generic(Op::kSilu, v * s, {x},
                        {s * (1.0 + v * (1.0 - s))});
}

// silu'(x) as a node; its own derivative is silu''(x).
inline Var silu_prime(Var x) {
  Tape& t = *x.tape;
  const double v = t.value(x);
  const double s = sigmoid_value(v);
  const double sp = s * (1.0 + v * (1.0 - s));
  const double spp = s * (1.0 - s) * (2.0 + v * (1.0 - 2.0 * s));
  return t.emit_generic(Op::kSiluPrime, sp, {x}, {spp});
}

inline Var square(Var x) {
  Tape& t = *x.tape;
  const double v = t.value(x);
  return t.emit_generic(Op::kSquare, v * v, {x}, {2.0 * v});
}

inline Var scale(Var x, double c) {
  Tape& t = *x.tape;
  return t.emit_generic(Op::kScale, c * t.value(x), {x}, {c});
}

inline Var add_const(Var x, double c) {
  Tape& t = *x.tape;
  return t.emit_generic(Op::kAddConst, t.value(x) + c, {x}, {1.0});
}

inline Var sub_from_const(double c, Var x) {
  Tape& t = *x.tape;
  return t.emit_generic(Op::kSubFromConst, c - t.value(x), {x}, {-1.0});
}

// w1*x1 + w2*x2 with all four factors live nodes.
inline Var fma2(Var w1, Var x1, Var w2, Var x2) {
  Tape& t = *w1.tape;
  const double v =
      t.value(w1) * t.value(x1) + t.value(w2) * t.value(x2);
  return t.emit_generic(Op::kFma2, v, {w1, x1, w2, x2},
                        {t.value(x1), t.value(w1), t.value(x2), t.value(w2)});
}

Var sum(Tape& t, std::span<const Var> xs);

inline Var operator+(Var x, Var y) { return add(x, y); }
inline Var operator-(Var x, Var y) { return sub(x, y); }
inline Var operator*(Var x, Var y) { return mul(x, y); }
inline Var operator/(Var x, Var y) { return div(x, y); }
inline Var operator-(Var x) { return neg(x); }
inline Var operator+(Var x, double c) { return add_const(x, c); }
inline Var operator+(double c, Var x) { return add_const(x, c); }
inline Var operator-(Var x, double c) { return add_const(x, -c); }
inline Var operator-(double c, Var x) { return sub_from_const(c, x); }
inline Var operator*(Var x, double c) { return scale(x, c); }
inline Var operator*(double c, Var x) { return scale(x, c); }
inline Var operator/(Var x, double c) { return scale(x, 1.0 / c); }

}  // namespace sympkan::ad
