#pragma once

#include <span>
#include <vector>

#include "stnmt/model.hpp"
#include "stnmt/treebank.hpp"

STNMT_BEGIN_NAMESPACE

// GRU step. Multiple inputs are concatenated before entering the gates.
// Works row-wise on matrices as well as on vectors.
Tensor gru_cell(Tape& tape, const Tensor& h_prev, std::span<const Tensor> inputs,
                const GruWeights& w);
inline Tensor gru_cell(Tape& tape, const Tensor& h_prev, std::initializer_list<Tensor> inputs,
                       const GruWeights& w) {
  return gru_cell(tape, h_prev, std::span<const Tensor>(inputs.begin(), inputs.size()), w);
}

// Bidirectional sequential annotations [forward_i; backward_i], i = 1..I,
// both directions starting from a zero state.
std::vector<Tensor> encode_sequential(Tape& tape, std::span<const int> source,
                                      const EncoderWeights& w);

// One Tree-GRU combination of two child states.
Tensor tree_gru_node(Tape& tape, const Tensor& left, const Tensor& right, const TreeGruWeights& w);

// Bottom-up states for nodes 1..2I-1 (element k-1 holds node k). Leaves copy
// the sequential annotation.
std::vector<Tensor> encode_bottom_up(Tape& tape, const BinaryTree& tree,
                                     std::span<const Tensor> sequential, const TreeGruWeights& w);

// Top-down states: tanh(W up_root + b) at the root, then a GRU step from the
// parent's state with the node's bottom-up state as input, using the left or
// right weight set by the node's position.
std::vector<Tensor> encode_top_down(Tape& tape, const BinaryTree& tree,
                                    std::span<const Tensor> bottom_up, const TopDownWeights& w);

struct Annotations {
  std::vector<Tensor> sequential;  // I
  std::vector<Tensor> bottom_up;   // 2I-1, tree encoders only
  std::vector<Tensor> top_down;    // 2I-1, bidirectional only
};

Annotations encode(Tape& tape, const Model& model, std::span<const int> source,
                   const BinaryTree* tree);

// The vectors the decoder attends over, leaves 1..I first and then internal
// nodes I+1..2I-1: h<-> (sequential), h^ (bottom-up) or [h^; hv]
// (bidirectional).
struct NodeAnnotation {
  int node;
  Tensor vector;
};
std::vector<NodeAnnotation> annotations_for_attention(Tape& tape, const ModelConfig& config,
                                                      const Annotations& annotations);

STNMT_END_NAMESPACE
