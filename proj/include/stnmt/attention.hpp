#pragma once

#include <span>
#include <vector>

#include "stnmt/encoder.hpp"

STNMT_BEGIN_NAMESPACE

// Everything the decoder needs about the source, computed once per sentence.
struct AttentionMemory {
  std::vector<int> nodes;    // node id of each row (1-based)
  Tensor annotations;        // [N x annotation]
  Tensor keys;               // U_a h_i for every row, [N x attention]
  std::vector<int> left_rows;   // row of L(i), -1 for leaves / sequential mode
  std::vector<int> right_rows;  // row of R(i)
  bool tree = false;

  std::size_t size() const noexcept { return nodes.size(); }
};

AttentionMemory make_memory(Tape& tape, std::span<const NodeAnnotation> annotations,
                            const BinaryTree* tree, const AttentionWeights& w);

struct AttentionResult {
  Tensor scores;   // e_{j,i}, [N]
  Tensor weights;  // alpha_{j,i}, [N]
  Tensor context;  // c_j, [annotation]
};

// e_i = v^T tanh(W_a d_prev + U_a h_i [+ V_a C_i]); alpha = softmax(e);
// c = sum_i alpha_i h_i. `coverage` is [N x coverage] or null.
AttentionResult attend(Tape& tape, const Tensor& d_prev, const AttentionMemory& memory,
                       const Tensor* coverage, const AttentionWeights& w);

// C_i' = GRU(C_i, [alpha_i; d_prev; h_i]) for every row at once.
Tensor update_coverage_word(Tape& tape, const Tensor& coverage, const Tensor& alpha,
                            const Tensor& d_prev, const AttentionMemory& memory,
                            const GruWeights& w);

// C_i' = GRU(C_i, [alpha_i; d_prev; h_i; C_L(i); alpha_L(i); C_R(i); alpha_R(i)]),
// children read from the previous step. Leaves get zero child slots.
Tensor update_coverage_tree(Tape& tape, const Tensor& coverage, const Tensor& alpha,
                            const Tensor& d_prev, const AttentionMemory& memory,
                            const GruWeights& w);

STNMT_END_NAMESPACE
