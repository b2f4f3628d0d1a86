#pragma once

#include <span>
#include <vector>

#include "sympkan/ad/tape.hpp"
#include "sympkan/models/model.hpp"
#include "sympkan/systems/dataset.hpp"

namespace sympkan::train {

// One supervised pair: a state and its observed time derivative.
struct Sample {
  std::vector<double> z;
  std::vector<double> dz;
};

// Flattens trajectories into a single pool of samples, trajectory by
// trajectory in order.
std::vector<Sample> pool_samples(const std::vector<systems::Trajectory>& trajs);

// Mean over the batch of the squared field mismatch,
//   (1/M) sum_j ||dz_j - f(z_j)||^2,
// where f is the model's symplectic field. For a Hamiltonian model this is
//   ||dq - dH/dp||^2 + ||dp + dH/dq||^2
// per sample. Refuses baseline networks and empty batches.
ad::Var hnn_loss(const models::Model& m, ad::Tape& tape,
                 std::span<const Sample> batch);

// Same mismatch against the network's direct output; baseline networks only.
ad::Var baseline_loss(const models::Model& m, ad::Tape& tape,
                      std::span<const Sample> batch);

// Dispatches on the model kind.
ad::Var batch_loss(const models::Model& m, ad::Tape& tape,
                   std::span<const Sample> batch);

// Numeric value of the batch loss without building backward topology.
double batch_loss_value(const models::Model& m, ad::Tape& scratch,
                        std::span<const Sample> batch);

// Loss and its parameter gradient in one pass; returns the loss.
double batch_loss_grad(const models::Model& m, ad::Tape& tape,
                       std::span<const Sample> batch, std::span<double> grad);

}  // namespace sympkan::train
