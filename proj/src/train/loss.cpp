#include "sympkan/train/loss.hpp"

#include <algorithm>

#include "sympkan/errors.hpp"

namespace sympkan::train {

namespace {

ad::Var sample_residual(const models::Model& m, ad::Tape& tape,
                        const Sample& s, bool symplectic) {
  std::vector<ad::Var> in(s.z.size());
  for (std::size_t i = 0; i < s.z.size(); ++i) in[i] = tape.input(s.z[i]);
  auto f = symplectic ? models::symplectic_vector_field(m, tape, in)
                      : models::model_vector_field(m, tape, in);
  std::vector<ad::Var> sq(f.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    sq[i] = ad::square(f[i] - s.dz[i]);
  return ad::sum(tape, sq);
}

ad::Var mean_residual(const models::Model& m, ad::Tape& tape,
                      std::span<const Sample> batch, bool symplectic) {
  if (batch.empty()) throw UsageError("loss needs a nonempty batch");
  std::vector<ad::Var> terms(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j)
    terms[j] = sample_residual(m, tape, batch[j], symplectic);
  return ad::sum(tape, terms) / static_cast<double>(batch.size());
}

}  // namespace

std::vector<Sample> pool_samples(const std::vector<systems::Trajectory>& trajs) {
  std::vector<Sample> pool;
  std::size_t total = 0;
  for (const auto& t : trajs) total += t.samples();
  pool.reserve(total);
  for (const auto& t : trajs)
    for (std::size_t i = 0; i < t.samples(); ++i)
      pool.push_back({t.state(i), t.derivative(i)});
  return pool;
}

ad::Var hnn_loss(const models::Model& m, ad::Tape& tape,
                 std::span<const Sample> batch) {
  if (models::model_kind(m) == models::ModelKind::kBaseline)
    throw ModelKindError("the Hamiltonian loss needs a Hamiltonian model");
  return mean_residual(m, tape, batch, true);
}

ad::Var baseline_loss(const models::Model& m, ad::Tape& tape,
                      std::span<const Sample> batch) {
  if (models::model_kind(m) != models::ModelKind::kBaseline)
    throw ModelKindError("the direct field loss is for baseline networks");
  return mean_residual(m, tape, batch, false);
}

ad::Var batch_loss(const models::Model& m, ad::Tape& tape,
                   std::span<const Sample> batch) {
  return models::model_kind(m) == models::ModelKind::kBaseline
             ? baseline_loss(m, tape, batch)
             : hnn_loss(m, tape, batch);
}

double batch_loss_value(const models::Model& m, ad::Tape& scratch,
                        std::span<const Sample> batch) {
  scratch.reset();
  const bool was_recording = scratch.recording();
  scratch.set_recording(false);
  double v;
  try {
    v = scratch.value(batch_loss(m, scratch, batch));
  } catch (...) {
    scratch.set_recording(was_recording);
    throw;
  }
  scratch.set_recording(was_recording);
  return v;
}

double batch_loss_grad(const models::Model& m, ad::Tape& tape,
                       std::span<const Sample> batch, std::span<double> grad) {
  tape.reset();
  ad::Var loss = batch_loss(m, tape, batch);
  tape.forward(loss);
  std::fill(grad.begin(), grad.end(), 0.0);
  tape.backward_accumulate(loss, grad);
  return tape.value(loss);
}

}  // namespace sympkan::train
