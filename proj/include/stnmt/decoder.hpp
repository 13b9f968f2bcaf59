#pragma once

#include <optional>
#include <span>
#include <vector>

#include "stnmt/attention.hpp"
#include "stnmt/corpus.hpp"

STNMT_BEGIN_NAMESPACE

// Encoder output plus attention memory for one source sentence.
struct EncodedSource {
  Annotations annotations;
  AttentionMemory memory;
};

EncodedSource encode_source(Tape& tape, const Model& model, std::span<const int> source,
                            const BinaryTree* tree);

struct DecoderState {
  std::size_t step = 0;
  Tensor hidden;                  // d_j
  std::optional<int> previous;    // target id consumed by the last step
  Tensor coverage;                // [N x coverage]; undefined without coverage
};

// d_0 = tanh(W_init mean(annotations) + b_init); coverage starts at zero.
DecoderState init_state(Tape& tape, const AttentionMemory& memory, const Model& model);

struct StepOutput {
  DecoderState state;
  Tensor log_probs;  // log P(. | y_<j, x), [target vocab]
  AttentionResult attention;
};

// Attends with d_{j-1}, advances the GRU on [t_{j-1}; c_j], reads out
// W_o tanh(W_t t_{j-1} + W_d d_j + W_c c_j + b) + b_o and updates coverage.
// `previous` is the last target id; nullopt at the first step feeds a zero
// embedding.
StepOutput decoder_step(Tape& tape, const DecoderState& state, std::optional<int> previous,
                        const AttentionMemory& memory, const Model& model);

std::vector<Real> probabilities(const StepOutput& out);

// Sum of -log P(y_j | y_<j, x) under teacher forcing.
Tensor sentence_nll(Tape& tape, const TrainingExample& example, const Model& model);
// sentence_nll divided by the number of target tokens.
Tensor sentence_loss(Tape& tape, const TrainingExample& example, const Model& model);

// Teacher-forced argmax predictions, one per target token.
std::vector<int> teacher_forced_predictions(const TrainingExample& example, const Model& model);

STNMT_END_NAMESPACE
