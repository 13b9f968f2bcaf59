#include "stnmt/decoder.hpp"

#include <algorithm>
#include <cmath>

STNMT_BEGIN_NAMESPACE

EncodedSource encode_source(Tape& tape, const Model& model, std::span<const int> source,
                            const BinaryTree* tree) {
  EncodedSource out;
  out.annotations = encode(tape, model, source, tree);
  const auto rows = annotations_for_attention(tape, model.config(), out.annotations);
  out.memory = make_memory(tape, rows, model.config().uses_tree() ? tree : nullptr,
                           model.decoder().attention);
  return out;
}

DecoderState init_state(Tape& tape, const AttentionMemory& memory, const Model& model) {
  const DecoderWeights& w = model.decoder();
  DecoderState s;
  s.hidden = tape.tanh(tape.linear(tape.mean_rows(memory.annotations), w.init_weight, w.init_bias));
  if (model.config().coverage != CoverageKind::None) {
    s.coverage = Tensor::zeros({memory.size(), model.config().dims.coverage});
  }
  return s;
}

StepOutput decoder_step(Tape& tape, const DecoderState& state, std::optional<int> previous,
                        const AttentionMemory& memory, const Model& model) {
  const DecoderWeights& w = model.decoder();
  const ModelConfig& config = model.config();
  const Tensor* coverage = state.coverage.defined() ? &state.coverage : nullptr;

  StepOutput out;
  out.attention = attend(tape, state.hidden, memory, coverage, w.attention);

  Tensor prev_embedding;
  if (previous) {
    if (*previous < 0 || static_cast<std::size_t>(*previous) >= config.target_vocab) {
      throw ContractError("decoder_step: target id " + std::to_string(*previous) +
                          " outside vocabulary of " + std::to_string(config.target_vocab));
    }
    prev_embedding = tape.row(w.embedding, static_cast<std::size_t>(*previous));
  } else {
    prev_embedding = Tensor::zeros({config.dims.embedding});
  }

  const Tensor& context = out.attention.context;
  out.state.step = state.step + 1;
  out.state.previous = previous;
  out.state.hidden = gru_cell(tape, state.hidden, {prev_embedding, context}, w.gru);

  const ReadoutWeights& r = w.readout;
  const Tensor mixed = tape.tanh(tape.add(
      tape.add(tape.linear(prev_embedding, r.from_prev, r.bias),
               tape.linear(out.state.hidden, r.from_state)),
      tape.linear(context, r.from_context)));
  out.log_probs = tape.log_softmax(tape.linear(mixed, r.output, r.output_bias));

  switch (config.coverage) {
    case CoverageKind::None:
      break;
    case CoverageKind::Word:
      out.state.coverage = update_coverage_word(tape, state.coverage, out.attention.weights,
                                                state.hidden, memory, *w.coverage);
      break;
    case CoverageKind::Tree:
      out.state.coverage = update_coverage_tree(tape, state.coverage, out.attention.weights,
                                                state.hidden, memory, *w.coverage);
      break;
  }
  return out;
}

std::vector<Real> probabilities(const StepOutput& out) {
  std::vector<Real> p(out.log_probs.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(out.log_probs[i]);
  return p;
}

Tensor sentence_nll(Tape& tape, const TrainingExample& example, const Model& model) {
  if (example.target.empty()) throw ContractError("sentence_loss: empty target sentence");
  if (example.target.back() != kEos) throw ContractError("sentence_loss: target must end with EOS");
  const BinaryTree* tree = example.tree ? &*example.tree : nullptr;
  const EncodedSource src = encode_source(tape, model, example.source, tree);
  DecoderState state = init_state(tape, src.memory, model);
  std::vector<Tensor> picks;
  picks.reserve(example.target.size());
  std::optional<int> previous;
  for (int gold : example.target) {
    StepOutput step = decoder_step(tape, state, previous, src.memory, model);
    if (gold < 0 || static_cast<std::size_t>(gold) >= model.config().target_vocab) {
      throw ContractError("sentence_loss: target id " + std::to_string(gold) + " out of range");
    }
    picks.push_back(tape.pick(step.log_probs, static_cast<std::size_t>(gold)));
    state = std::move(step.state);
    previous = gold;
  }
  return tape.scale(tape.sum(tape.concat(picks)), Real(-1));
}

Tensor sentence_loss(Tape& tape, const TrainingExample& example, const Model& model) {
  const Tensor nll = sentence_nll(tape, example, model);
  return tape.scale(nll, Real(1) / static_cast<Real>(example.target.size()));
}

std::vector<int> teacher_forced_predictions(const TrainingExample& example, const Model& model) {
  Tape tape = Tape::inference();
  const BinaryTree* tree = example.tree ? &*example.tree : nullptr;
  const EncodedSource src = encode_source(tape, model, example.source, tree);
  DecoderState state = init_state(tape, src.memory, model);
  std::vector<int> predicted;
  std::optional<int> previous;
  for (int gold : example.target) {
    StepOutput step = decoder_step(tape, state, previous, src.memory, model);
    const auto lp = step.log_probs.values();
    // PAD is never a prediction.
    const auto best = std::max_element(lp.begin() + 1, lp.end());
    predicted.push_back(static_cast<int>(best - lp.begin()));
    state = std::move(step.state);
    previous = gold;
  }
  return predicted;
}

STNMT_END_NAMESPACE
