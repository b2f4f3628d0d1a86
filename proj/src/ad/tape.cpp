#include "sympkan/ad/tape.hpp"

#include <string>

namespace sympkan::ad {

const char* op_name(Op op) {
  switch (op) {
    case Op::kConst: return "const";
    case Op::kInput: return "input";
    case Op::kParam: return "param";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kNeg: return "neg";
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSqrt: return "sqrt";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kSilu: return "silu";
    case Op::kSiluPrime: return "silu_prime";
    case Op::kSquare: return "square";
    case Op::kScale: return "scale";
    case Op::kAddConst: return "add_const";
    case Op::kSubFromConst: return "sub_from_const";
    case Op::kSum: return "sum";
    case Op::kFma2: return "fma2";
    case Op::kAffine: return "affine";
    case Op::kSplineCombo: return "spline_combo";
  }
  return "?";
}

Var Tape::emit_generic_span(Op op, double value, std::span<const Var> parents,
                            std::span<const double> partials) {
  value_.push_back(value);
  op_.push_back(op);
  if (recording_) {
    a_.push_back(static_cast<std::uint32_t>(parents_.size()));
    b_.push_back(static_cast<std::uint32_t>(parents.size()));
    for (std::size_t i = 0; i < parents.size(); ++i) {
      parents_.push_back(parents[i].id);
      partials_.push_back(partials[i]);
    }
  } else {
    a_.push_back(0);
    b_.push_back(0);
  }
  return Var{this, static_cast<std::int32_t>(value_.size() - 1)};
}

Var Tape::affine(std::size_t pbase, std::size_t stride, std::size_t n,
                 Var first_input, std::ptrdiff_t bias_param) {
  if (store_ == nullptr)
    throw UsageError("tape has no parameter store attached");
  if (pbase + (n == 0 ? 0 : (n - 1) * stride) >= store_->size() && n > 0)
    throw UsageError("affine parameter range out of store bounds");
  const double* theta = store_->data();
  const double* vals = value_.data() + first_input.id;
  double v = bias_param >= 0 ? theta[bias_param] : 0.0;
  for (std::size_t j = 0; j < n; ++j) v += theta[pbase + j * stride] * vals[j];

  value_.push_back(v);
  op_.push_back(Op::kAffine);
  if (recording_) {
    a_.push_back(static_cast<std::uint32_t>(affine_.size()));
    affine_.push_back(AffineMeta{static_cast<std::uint32_t>(pbase),
                                 static_cast<std::uint32_t>(stride),
                                 static_cast<std::uint32_t>(n),
                                 static_cast<std::uint32_t>(first_input.id),
                                 static_cast<std::int32_t>(bias_param)});
  } else {
    a_.push_back(0);
  }
  b_.push_back(0);
  return Var{this, static_cast<std::int32_t>(value_.size() - 1)};
}

Var Tape::spline_combo(std::size_t cbase, std::span<const double> basis, Var x,
                       double partial_x) {
  if (store_ == nullptr)
    throw UsageError("tape has no parameter store attached");
  const double* theta = store_->data();
  double v = 0.0;
  for (std::size_t j = 0; j < basis.size(); ++j) v += theta[cbase + j] * basis[j];

  value_.push_back(v);
  op_.push_back(Op::kSplineCombo);
  if (recording_) {
    a_.push_back(static_cast<std::uint32_t>(combo_.size()));
    ComboMeta meta;
    meta.cbase = static_cast<std::uint32_t>(cbase);
    meta.n = static_cast<std::uint32_t>(basis.size());
    meta.aux_begin = static_cast<std::uint32_t>(aux_.size());
    meta.x = x.valid() ? x.id : -1;
    meta.partial_x = partial_x;
    combo_.push_back(meta);
    aux_.insert(aux_.end(), basis.begin(), basis.end());
  } else {
    a_.push_back(0);
  }
  b_.push_back(0);
  return Var{this, static_cast<std::int32_t>(value_.size() - 1)};
}

double Tape::forward(Var root) {
  if (root.tape != this || root.id < 0 ||
      static_cast<std::size_t>(root.id) >= value_.size())
    throw UsageError("forward: root is not a node of this tape");
  for (std::int32_t i = 0; i <= root.id; ++i) {
    if (!std::isfinite(value_[static_cast<std::size_t>(i)]))
      throw NumericalError("non-finite value at node " + std::to_string(i) +
                           " (" + op_name(op_[static_cast<std::size_t>(i)]) +
                           ")");
  }
  forwarded_root_ = root.id;
  return value_[static_cast<std::size_t>(root.id)];
}

std::vector<double> Tape::backward(Var root) {
  if (store_ == nullptr)
    throw UsageError("tape has no parameter store attached");
  std::vector<double> grad(store_->size(), 0.0);
  backward_accumulate(root, grad);
  return grad;
}

void Tape::backward_accumulate(Var root, std::span<double> grad) {
  if (!recording_)
    throw UsageError("backward: tape was not recording");
  if (root.tape != this || root.id < 0)
    throw UsageError("backward: root is not a node of this tape");
  if (forwarded_root_ != root.id)
    throw UsageError("backward called before forward on this root");
  if (store_ != nullptr && grad.size() != store_->size())
    throw UsageError("backward: gradient buffer has wrong size");

  const std::size_t n = static_cast<std::size_t>(root.id) + 1;
  adjoint_.assign(value_.size(), 0.0);
  adjoint_[n - 1] = 1.0;

  const double* theta = store_ != nullptr ? store_->data() : nullptr;
  for (std::size_t i = n; i-- > 0;) {
    const double adj = adjoint_[i];
    if (adj == 0.0) continue;
    switch (op_[i]) {
      case Op::kConst:
      case Op::kInput:
        break;
      case Op::kParam:
        grad[a_[i]] += adj;
        break;
      case Op::kAffine: {
        const AffineMeta& m = affine_[a_[i]];
        const double* vals = value_.data() + m.node_base;
        double* adjs = adjoint_.data() + m.node_base;
        for (std::uint32_t j = 0; j < m.n; ++j) {
          grad[m.pbase + j * m.stride] += adj * vals[j];
          adjs[j] += adj * theta[m.pbase + j * m.stride];
        }
        if (m.bias >= 0) grad[static_cast<std::size_t>(m.bias)] += adj;
        break;
      }
      case Op::kSplineCombo: {
        const ComboMeta& m = combo_[a_[i]];
        const double* basis = aux_.data() + m.aux_begin;
        for (std::uint32_t j = 0; j < m.n; ++j)
          grad[m.cbase + j] += adj * basis[j];
        if (m.x >= 0)
          adjoint_[static_cast<std::size_t>(m.x)] += adj * m.partial_x;
        break;
      }
      default: {
        const std::uint32_t pb = a_[i];
        const std::uint32_t pn = b_[i];
        for (std::uint32_t j = 0; j < pn; ++j)
          adjoint_[static_cast<std::size_t>(parents_[pb + j])] +=
              adj * partials_[pb + j];
        break;
      }
    }
  }
}

Var sum(Tape& t, std::span<const Var> xs) {
  if (xs.empty()) return t.constant(0.0);
  double v = 0.0;
  for (const Var& x : xs) v += t.value(x);
  std::vector<double> ones(xs.size(), 1.0);
  return t.emit_generic_span(Op::kSum, v, xs, ones);
}

}  // namespace sympkan::ad
