#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sympkan/models/model.hpp"
#include "sympkan/train/loss.hpp"
#include "sympkan/train/optim.hpp"

namespace sympkan::train {

struct TrainConfig {
  std::string optimizer = "adam";  // adam | lbfgs
  AdamOptions adam;
  LbfgsOptions lbfgs;
  int steps = 100;
  int batch_size = 32;
  std::uint64_t seed = 0;
  // when set, a numerical abort saves the current parameters here before
  // rethrowing
  std::filesystem::path checkpoint_path;
};

struct TrainHistory {
  std::vector<double> loss;       // batch loss at each step's starting point
  std::vector<double> grad_norm;
  std::vector<double> ms;         // wall time per step
  double final_train_loss = 0.0;
  double final_test_loss = 0.0;
};

// Minibatch training: epochs are seed-shuffled permutations of the pool,
// consumed in order; the model's parameters are updated in place.
TrainHistory train(models::Model& model, const std::vector<Sample>& train_pool,
                   const std::vector<Sample>& test_pool,
                   const TrainConfig& config);

}  // namespace sympkan::train
