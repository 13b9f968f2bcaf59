#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "stnmt/decoder.hpp"

STNMT_BEGIN_NAMESPACE

// Attention weights per emitted target step. Column c belongs to node
// nodes[c] (1..I for words, I+1..2I-1 for internal nodes).
struct AttentionTrace {
  std::vector<int> nodes;
  std::vector<std::vector<Real>> rows;
};

struct Hypothesis {
  std::vector<int> tokens;  // ends with EOS when finished
  double log_prob = 0;
  AttentionTrace trace;

  bool finished() const noexcept { return !tokens.empty() && tokens.back() == kEos; }
};

struct DecodeOptions {
  std::size_t beam = 10;
  std::size_t max_len = 0;  // 0: 2 * source length + 5
  bool length_norm = false;
};

std::size_t default_max_len(std::size_t source_len);

// Argmax at every step (lowest id wins a tie, PAD never chosen) until EOS or
// max_len tokens.
Hypothesis greedy_decode(const Model& model, std::span<const int> source, const BinaryTree* tree,
                         std::size_t max_len = 0);

// Beam search whose width shrinks as hypotheses finish. Candidates are ranked
// by score, then by lexicographically smaller token ids. With length_norm
// the final choice divides log probability by length.
Hypothesis beam_decode(const Model& model, std::span<const int> source, const BinaryTree* tree,
                       const DecodeOptions& options = {});

// Sum of log P over `tokens` under teacher forcing.
double sequence_log_prob(const Model& model, std::span<const int> source, const BinaryTree* tree,
                         std::span<const int> tokens);

// Decodes every example independently. beam == 1 uses greedy_decode.
std::vector<Hypothesis> decode_corpus(const Model& model, std::span<const TrainingExample> examples,
                                      const DecodeOptions& options, std::size_t threads = 1);

// Header: "target", source words, then "[k]" for each internal node. One row
// per target step with weights printed to 4 decimals.
std::string export_attention(const AttentionTrace& trace, std::span<const std::string> target_words,
                             std::span<const std::string> source_words);

STNMT_END_NAMESPACE
