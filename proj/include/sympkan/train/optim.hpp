#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

namespace sympkan::train {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled: applied to params, not the gradient
};

class Adam {
 public:
  Adam(std::size_t n, AdamOptions opts);

  // One update in place. A non-finite gradient rejects the step and leaves
  // parameters and moments untouched.
  void step(std::span<double> params, std::span<const double> grad);

  const AdamOptions& options() const { return opts_; }

 private:
  AdamOptions opts_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

struct LbfgsOptions {
  int memory = 10;
  double c1 = 1e-4;          // Armijo sufficient-decrease constant
  double shrink = 0.5;       // backtracking factor
  int max_trials = 25;
  double sy_min = 1e-10;     // curvature threshold for storing a pair
};

struct LbfgsStepInfo {
  double loss = 0.0;         // at the step's starting point
  double grad_norm = 0.0;
  double step_size = 0.0;    // accepted line-search step
  bool fallback = false;     // line search failed, took plain descent
  bool zero_step = false;    // even the fallback failed; parameters unchanged
};

class Lbfgs {
 public:
  // Evaluates the objective at `params` and writes the gradient; the same
  // closure is used for every trial within one step.
  using Closure =
      std::function<double(std::span<const double> params, std::span<double> grad)>;

  Lbfgs(std::size_t n, LbfgsOptions opts);

  LbfgsStepInfo step(std::span<double> params, const Closure& closure);

  void clear_history();
  std::size_t history_size() const { return pairs_.size(); }

 private:
  struct Pair {
    std::vector<double> s, y;
    double rho = 0.0;
  };

  std::vector<double> direction(std::span<const double> grad) const;

  LbfgsOptions opts_;
  std::size_t n_;
  std::deque<Pair> pairs_;
  std::vector<double> grad_, grad_new_, grad_keep_, trial_;
};

}  // namespace sympkan::train
