#include "sympkan/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "sympkan/errors.hpp"
#include "sympkan/rng.hpp"

namespace sympkan::train {

namespace {

class BatchCycler {
 public:
  BatchCycler(std::size_t pool, std::size_t batch, std::uint64_t seed)
      : pool_(pool), batch_(std::min(batch, pool)), rng_(seed) {
    order_.resize(pool_);
    for (std::size_t i = 0; i < pool_; ++i) order_[i] = i;
    reshuffle();
  }

  // indices of the next batch, reshuffling between epochs
  std::vector<std::size_t> next() {
    if (cursor_ + batch_ > pool_) reshuffle();
    std::vector<std::size_t> idx(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + batch_));
    cursor_ += batch_;
    return idx;
  }

 private:
  void reshuffle() {
    rng_.shuffle(std::span<std::size_t>(order_));
    cursor_ = 0;
  }

  std::size_t pool_;
  std::size_t batch_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

std::vector<Sample> gather(const std::vector<Sample>& pool,
                           std::span<const std::size_t> idx) {
  std::vector<Sample> batch;
  batch.reserve(idx.size());
  for (std::size_t i : idx) batch.push_back(pool[i]);
  return batch;
}

void maybe_checkpoint(const models::Model& model, const TrainConfig& config) {
  if (config.checkpoint_path.empty()) return;
  try {
    models::save_model(model, config.checkpoint_path);
  } catch (...) {
    // the original abort matters more than a failing checkpoint write
  }
}

}  // namespace

TrainHistory train(models::Model& model, const std::vector<Sample>& train_pool,
                   const std::vector<Sample>& test_pool,
                   const TrainConfig& config) {
  if (train_pool.empty()) throw UsageError("training pool is empty");
  if (config.steps < 1) throw UsageError("need at least one step");
  if (config.batch_size < 1) throw UsageError("batch size must be positive");
  if (config.optimizer != "adam" && config.optimizer != "lbfgs")
    throw UsageError("unknown optimizer '" + config.optimizer +
                     "' (expected adam or lbfgs)");

  ad::ParameterStore& store = models::model_params(model);
  ad::Tape tape(&store);
  TrainHistory history;
  history.loss.reserve(static_cast<std::size_t>(config.steps));
  history.grad_norm.reserve(static_cast<std::size_t>(config.steps));
  history.ms.reserve(static_cast<std::size_t>(config.steps));

  BatchCycler cycler(train_pool.size(),
                     static_cast<std::size_t>(config.batch_size), config.seed);
  std::vector<double> grad(store.size());

  const bool use_adam = config.optimizer == "adam";
  Adam adam(store.size(), config.adam);
  Lbfgs lbfgs(store.size(), config.lbfgs);

  try {
    for (int step = 0; step < config.steps; ++step) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto batch = gather(train_pool, cycler.next());

      double loss, gnorm;
      if (use_adam) {
        loss = batch_loss_grad(model, tape, batch, grad);
        double s = 0.0;
        for (double g : grad) s += g * g;
        gnorm = std::sqrt(s);
        adam.step(store.values(), grad);
      } else {
        auto closure = [&](std::span<const double> params,
                           std::span<double> g) {
          std::copy(params.begin(), params.end(), store.data());
          return batch_loss_grad(model, tape, batch, g);
        };
        LbfgsStepInfo info = lbfgs.step(store.values(), closure);
        loss = info.loss;
        gnorm = info.grad_norm;
      }

      const auto t1 = std::chrono::steady_clock::now();
      history.loss.push_back(loss);
      history.grad_norm.push_back(gnorm);
      history.ms.push_back(
          std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
  } catch (const NumericalError&) {
    maybe_checkpoint(model, config);
    throw;
  }

  history.final_train_loss = batch_loss_value(model, tape, train_pool);
  history.final_test_loss =
      test_pool.empty() ? std::numeric_limits<double>::quiet_NaN()
                        : batch_loss_value(model, tape, test_pool);
  return history;
}

}  // namespace sympkan::train
