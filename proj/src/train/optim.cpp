#include "sympkan/train/optim.hpp"

#include <algorithm>
#include <cmath>

#include "sympkan/errors.hpp"

namespace sympkan::train {

namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace

Adam::Adam(std::size_t n, AdamOptions opts)
    : opts_(opts), m_(n, 0.0), v_(n, 0.0) {
  if (!(opts_.lr > 0.0)) throw UsageError("learning rate must be positive");
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw ShapeError("optimizer state does not match the parameter count");
  if (!all_finite(grad))
    throw NumericalError("non-finite gradient; step rejected");

  t_ += 1;
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = opts_.beta1 * m_[i] + (1.0 - opts_.beta1) * grad[i];
    v_[i] = opts_.beta2 * v_[i] + (1.0 - opts_.beta2) * grad[i] * grad[i];
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    params[i] -= opts_.lr * opts_.weight_decay * params[i];
    params[i] -= opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps);
  }
}

Lbfgs::Lbfgs(std::size_t n, LbfgsOptions opts)
    : opts_(opts), n_(n), grad_(n), grad_new_(n), grad_keep_(n), trial_(n) {
  if (opts_.memory < 1) throw UsageError("history size must be positive");
}

void Lbfgs::clear_history() { pairs_.clear(); }

std::vector<double> Lbfgs::direction(std::span<const double> grad) const {
  // two-loop recursion for -H*grad with the standard initial scaling
  std::vector<double> q(grad.begin(), grad.end());
  std::vector<double> alpha(pairs_.size());
  for (std::size_t k = pairs_.size(); k-- > 0;) {
    const Pair& pr = pairs_[k];
    alpha[k] = pr.rho * dot(pr.s, q);
    for (std::size_t i = 0; i < n_; ++i) q[i] -= alpha[k] * pr.y[i];
  }
  if (!pairs_.empty()) {
    const Pair& last = pairs_.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& qi : q) qi *= gamma;
  }
  for (std::size_t k = 0; k < pairs_.size(); ++k) {
    const Pair& pr = pairs_[k];
    const double beta = pr.rho * dot(pr.y, q);
    for (std::size_t i = 0; i < n_; ++i) q[i] += (alpha[k] - beta) * pr.s[i];
  }
  for (double& qi : q) qi = -qi;
  return q;
}

LbfgsStepInfo Lbfgs::step(std::span<double> params, const Closure& closure) {
  if (params.size() != n_)
    throw ShapeError("optimizer state does not match the parameter count");

  LbfgsStepInfo info;
  const double f0 = closure(params, grad_);
  if (!std::isfinite(f0) || !all_finite(grad_))
    throw NumericalError("non-finite objective or gradient; step rejected");
  info.loss = f0;
  info.grad_norm = norm(grad_);
  if (info.grad_norm == 0.0) {
    info.zero_step = true;
    return info;
  }

  // the closure may evaluate through shared state bound to `params`, so
  // keep the starting point and write the outcome back explicitly
  const std::vector<double> x0(params.begin(), params.end());

  std::vector<double> dir = direction(grad_);
  double slope = dot(grad_, dir);
  if (!(slope < 0.0)) {
    // not a descent direction; restart from plain gradient descent
    pairs_.clear();
    for (std::size_t i = 0; i < n_; ++i) dir[i] = -grad_[i];
    slope = -info.grad_norm * info.grad_norm;
    info.fallback = true;
  }

  auto armijo_ok = [&](double f, double a, double sl) {
    return std::isfinite(f) && f <= f0 + opts_.c1 * a * sl;
  };
  auto eval_at = [&](double a, std::span<const double> d,
                     std::span<double> g) {
    for (std::size_t i = 0; i < n_; ++i) trial_[i] = x0[i] + a * d[i];
    return closure(trial_, g);
  };

  auto line_search = [&](std::span<const double> d, double sl,
                         double* accepted) -> bool {
    double a = 1.0;
    double fa = 0.0;
    bool found = false;
    for (int trial = 0; trial < opts_.max_trials; ++trial) {
      fa = eval_at(a, d, grad_new_);
      if (armijo_ok(fa, a, sl)) {
        found = true;
        break;
      }
      a *= opts_.shrink;
    }
    if (!found) return false;

    // one interpolation pass toward the minimizer of the quadratic fit
    // through f0, the directional slope, and fa; on a quadratic objective
    // this is the exact line minimum, which keeps the curvature pairs
    // well conditioned
    const double denom = 2.0 * (fa - f0 - sl * a);
    const double ahat = denom > 0.0 ? -sl * a * a / denom : 0.0;
    if (std::isfinite(ahat) && ahat > 0.0 && ahat != a) {
      grad_keep_.assign(grad_new_.begin(), grad_new_.end());
      const double fhat = eval_at(ahat, d, grad_new_);
      if (armijo_ok(fhat, ahat, sl) && fhat < fa) {
        *accepted = ahat;
        return true;
      }
      grad_new_.assign(grad_keep_.begin(), grad_keep_.end());
    }
    *accepted = a;
    return true;
  };

  double a = 0.0;
  if (!line_search(dir, slope, &a)) {
    // failed along the quasi-curvature direction: drop the history and try
    // plain descent once more
    pairs_.clear();
    info.fallback = true;
    for (std::size_t i = 0; i < n_; ++i) dir[i] = -grad_[i];
    slope = -info.grad_norm * info.grad_norm;
    if (!line_search(dir, slope, &a)) {
      info.zero_step = true;
      std::copy(x0.begin(), x0.end(), params.begin());
      return info;
    }
  }

  info.step_size = a;
  // grad_new_ holds the gradient at the accepted point
  Pair pr;
  pr.s.resize(n_);
  pr.y.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    pr.s[i] = a * dir[i];
    pr.y[i] = grad_new_[i] - grad_[i];
    params[i] = x0[i] + pr.s[i];
  }
  const double sy = all_finite(grad_new_) ? dot(pr.s, pr.y) : 0.0;
  if (sy > opts_.sy_min) {
    pr.rho = 1.0 / sy;
    pairs_.push_back(std::move(pr));
    if (pairs_.size() > static_cast<std::size_t>(opts_.memory))
      pairs_.pop_front();
  } else {
    // the step found no usable curvature, so the model built from the
    // stored pairs has stopped describing the local landscape; restart
    // from scaled steepest descent rather than keep a frozen direction
    pairs_.clear();
  }
  return info;
}

}  // namespace sympkan::train
