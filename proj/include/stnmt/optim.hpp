#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "stnmt/decoder.hpp"

STNMT_BEGIN_NAMESPACE

// Adadelta. Accumulators start at zero and mirror the parameter set.
struct AdadeltaState {
  double rho = 0.95;
  double epsilon = 1e-6;
  std::vector<std::vector<Real>> mean_sq_grad;
  std::vector<std::vector<Real>> mean_sq_delta;

  static AdadeltaState for_params(const ParameterSet& params, double rho = 0.95,
                                  double epsilon = 1e-6);
};

// E[g^2] <- rho E[g^2] + (1-rho) g^2
// delta  =  -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
// E[dx^2] <- rho E[dx^2] + (1-rho) delta^2;  param += delta
void adadelta_update(std::span<Real> param, std::span<const Real> grad, std::span<Real> mean_sq_grad,
                     std::span<Real> mean_sq_delta, double rho, double epsilon);

// Applies one update from the gradients held by `params`. A non-finite
// gradient throws TrainingError before any parameter changes.
void adadelta_step(ParameterSet& params, AdadeltaState& state);

struct EpochLog {
  std::size_t epoch = 0;
  double mean_loss = 0;  // per target token
  double wall_seconds = 0;
};

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  // Global-norm gradient clip; 0 disables it.
  double clip_norm = 0;
  double rho = 0.95;
  double epsilon = 1e-6;
  // Written after every finished epoch (and once at the end) when non-empty.
  std::filesystem::path checkpoint;
  // Called after each epoch; returning false stops training.
  std::function<bool(const EpochLog&, const Model&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  std::size_t clipped_batches = 0;
};

// Accumulates the gradient of (sum of token NLL over the batch) / (batch
// target tokens) into the model parameters and returns the summed NLL.
double accumulate_batch_gradient(Model& model, const Batch& batch, std::size_t threads = 1);

TrainResult train(Model& model, std::span<const TrainingExample> examples, const TrainConfig& config);
TrainResult train(Model& model, std::span<const TrainingExample> examples, const TrainConfig& config,
                  AdadeltaState& state);

// Phase-two starting point: a freshly initialised model for `config` (seeded
// with `seed`) whose bottom-up side (source embeddings, sequential encoder,
// Tree-GRU) is copied from `phase_one`.
Model init_phase_two(const Model& phase_one, const ModelConfig& config, std::uint64_t seed);

struct TwoPhaseResult {
  Model phase_one;
  Model model;
  TrainResult first;
  TrainResult second;
};

// Seed of the fresh phase-two initialisation in train_two_phase.
std::uint64_t phase_two_seed(std::uint64_t seed);

// Trains a bottom-up tree model, then the bidirectional model initialised from it.
TwoPhaseResult train_two_phase(std::span<const TrainingExample> examples, const ModelConfig& config,
                               std::uint64_t seed, const TrainConfig& phase_one,
                               const TrainConfig& phase_two);

STNMT_END_NAMESPACE
