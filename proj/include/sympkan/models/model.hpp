#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sympkan/ad/parameter_store.hpp"
#include "sympkan/ad/tape.hpp"
#include "sympkan/models/feedforward.hpp"
#include "sympkan/models/kar.hpp"

namespace sympkan::models {

// Plain vector-field regressor: maps a state of dimension 2d to its
// (unconstrained) time derivative.
struct BaselineNet {
  BaselineNet(std::vector<int> widths, std::uint64_t seed);
  FeedForward net;
};

// Scalar network trained as a Hamiltonian; the field comes from its
// input gradient.
struct MlpHamiltonian {
  MlpHamiltonian(std::vector<int> widths, std::uint64_t seed);
  FeedForward net;
};

using Model = std::variant<BaselineNet, MlpHamiltonian, KarHamiltonian>;

enum class ModelKind { kBaseline, kMlpHnn, kKarHnn };

const char* kind_name(ModelKind kind);
ModelKind kind_from_name(const std::string& name);

ModelKind model_kind(const Model& m);
ad::ParameterStore& model_params(Model& m);
const ad::ParameterStore& model_params(const Model& m);
int model_input_dim(const Model& m);

// H(z) as a graph node. Baseline networks have no Hamiltonian.
ad::Var eval_hamiltonian(const Model& m, ad::Tape& tape,
                         std::span<const ad::Var> z);

// J grad H: dq/dt = dH/dp, dp/dt = -dH/dq, with z = [q; p].
// Baseline networks have no Hamiltonian, so this refuses them.
std::vector<ad::Var> symplectic_vector_field(const Model& m, ad::Tape& tape,
                                             std::span<const ad::Var> z);

// The field the model predicts: the raw output for a baseline network,
// the symplectic field for the Hamiltonian families.
std::vector<ad::Var> model_vector_field(const Model& m, ad::Tape& tape,
                                        std::span<const ad::Var> z);

// Numeric conveniences. `scratch` must have been constructed over this
// model's parameter store; it is reset on entry, so it can be reused
// across many calls without reallocating.
double hamiltonian_value(const Model& m, ad::Tape& scratch,
                         std::span<const double> z);
void field_values(const Model& m, ad::Tape& scratch, std::span<const double> z,
                  std::span<double> out);

// Binary model container: magic, format version, a JSON description of the
// architecture, then the raw parameter vector.
std::vector<std::uint8_t> serialize(const Model& m);
Model deserialize(std::span<const std::uint8_t> bytes);
void save_model(const Model& m, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace sympkan::models
