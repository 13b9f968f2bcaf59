#include "stnmt/encoder.hpp"

STNMT_BEGIN_NAMESPACE

Tensor gru_cell(Tape& tape, const Tensor& h_prev, std::span<const Tensor> inputs,
                const GruWeights& w) {
  if (inputs.empty()) throw ShapeError("gru_cell: no inputs");
  const Tensor x = inputs.size() == 1 ? inputs[0] : tape.concat(inputs);
  const Tensor r = tape.sigmoid(
      tape.add(tape.linear(x, w.input_reset, w.bias_reset), tape.linear(h_prev, w.hidden_reset)));
  const Tensor z = tape.sigmoid(tape.add(tape.linear(x, w.input_update, w.bias_update),
                                         tape.linear(h_prev, w.hidden_update)));
  const Tensor cand = tape.tanh(tape.add(tape.linear(x, w.input_cand, w.bias_cand),
                                         tape.linear(tape.mul(r, h_prev), w.hidden_cand)));
  return tape.add(tape.mul(tape.one_minus(z), h_prev), tape.mul(z, cand));
}

std::vector<Tensor> encode_sequential(Tape& tape, std::span<const int> source,
                                      const EncoderWeights& w) {
  const std::size_t n = source.size();
  if (n == 0) throw ContractError("encode_sequential: empty source sentence");
  const std::size_t vocab = w.embedding.shape()[0];
  std::vector<Tensor> embedded;
  embedded.reserve(n);
  for (int id : source) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw ContractError("encode_sequential: source id " + std::to_string(id) +
                          " outside vocabulary of " + std::to_string(vocab));
    }
    embedded.push_back(tape.row(w.embedding, static_cast<std::size_t>(id)));
  }
  const std::size_t hidden = w.forward.hidden_reset.shape()[0];
  std::vector<Tensor> fwd(n), bwd(n);
  Tensor h = Tensor::zeros({hidden});
  for (std::size_t i = 0; i < n; ++i) {
    h = gru_cell(tape, h, {embedded[i]}, w.forward);
    fwd[i] = h;
  }
  h = Tensor::zeros({hidden});
  for (std::size_t i = n; i-- > 0;) {
    h = gru_cell(tape, h, {embedded[i]}, w.backward);
    bwd[i] = h;
  }
  std::vector<Tensor> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(tape.concat({fwd[i], bwd[i]}));
  return out;
}

namespace {

Tensor gate(Tape& tape, const Tensor& left, const Tensor& right, const TreeGateWeights& g) {
  return tape.sigmoid(
      tape.add(tape.linear(left, g.from_left, g.bias), tape.linear(right, g.from_right)));
}

}  // namespace

Tensor tree_gru_node(Tape& tape, const Tensor& left, const Tensor& right, const TreeGruWeights& w) {
  if (left.shape() != right.shape()) {
    throw ShapeError("tree_gru_node: children " + to_string(left.shape()) + " and " +
                     to_string(right.shape()));
  }
  const Tensor reset_l = gate(tape, left, right, w.reset_left);
  const Tensor reset_r = gate(tape, left, right, w.reset_right);
  const Tensor update_l = gate(tape, left, right, w.update_left);
  const Tensor update_r = gate(tape, left, right, w.update_right);
  const Tensor update = gate(tape, left, right, w.update_cand);
  const Tensor cand = tape.tanh(tape.add(tape.linear(tape.mul(reset_l, left), w.cand_left),
                                         tape.linear(tape.mul(reset_r, right), w.cand_right)));
  return tape.add(tape.add(tape.mul(update_l, left), tape.mul(update_r, right)),
                  tape.mul(update, cand));
}

std::vector<Tensor> encode_bottom_up(Tape& tape, const BinaryTree& tree,
                                     std::span<const Tensor> sequential, const TreeGruWeights& w) {
  const std::size_t leaves = tree.leaf_count();
  if (sequential.size() != leaves) {
    throw ContractError("encode_bottom_up: " + std::to_string(sequential.size()) +
                        " annotations for a tree with " + std::to_string(leaves) + " leaves");
  }
  std::vector<Tensor> up(tree.node_count());
  for (std::size_t i = 0; i < leaves; ++i) up[i] = sequential[i];
  // Internal ids increase from children to parents.
  for (int k = static_cast<int>(leaves) + 1; k <= tree.root(); ++k) {
    up[k - 1] = tree_gru_node(tape, up[tree.left(k) - 1], up[tree.right(k) - 1], w);
  }
  return up;
}

std::vector<Tensor> encode_top_down(Tape& tape, const BinaryTree& tree,
                                    std::span<const Tensor> bottom_up, const TopDownWeights& w) {
  if (bottom_up.size() != tree.node_count()) {
    throw ContractError("encode_top_down: bottom-up states do not cover the tree");
  }
  std::vector<Tensor> down(tree.node_count());
  const int root = tree.root();
  down[root - 1] = tape.tanh(tape.linear(bottom_up[root - 1], w.root_weight, w.root_bias));
  for (int k = root - 1; k >= 1; --k) {
    const GruWeights& side = tree.is_left_child(k) ? w.left : w.right;
    down[k - 1] = gru_cell(tape, down[tree.parent(k) - 1], {bottom_up[k - 1]}, side);
  }
  return down;
}

Annotations encode(Tape& tape, const Model& model, std::span<const int> source,
                   const BinaryTree* tree) {
  const ModelConfig& config = model.config();
  Annotations out;
  out.sequential = encode_sequential(tape, source, model.encoder());
  if (!config.uses_tree()) return out;
  if (tree == nullptr) {
    throw ConfigError("encoder '" + to_string(config.encoder) + "' needs a source tree");
  }
  if (tree->leaf_count() != source.size()) {
    throw AlignmentError("tree has " + std::to_string(tree->leaf_count()) +
                         " leaves but the source has " + std::to_string(source.size()) + " tokens");
  }
  out.bottom_up = encode_bottom_up(tape, *tree, out.sequential, *model.encoder().bottom_up);
  if (config.encoder == EncoderKind::Bidirectional) {
    out.top_down = encode_top_down(tape, *tree, out.bottom_up, *model.encoder().top_down);
  }
  return out;
}

std::vector<NodeAnnotation> annotations_for_attention(Tape& tape, const ModelConfig& config,
                                                      const Annotations& annotations) {
  std::vector<NodeAnnotation> out;
  switch (config.encoder) {
    case EncoderKind::Sequential:
      for (std::size_t i = 0; i < annotations.sequential.size(); ++i) {
        out.push_back({static_cast<int>(i) + 1, annotations.sequential[i]});
      }
      break;
    case EncoderKind::BottomUp:
      for (std::size_t k = 0; k < annotations.bottom_up.size(); ++k) {
        out.push_back({static_cast<int>(k) + 1, annotations.bottom_up[k]});
      }
      break;
    case EncoderKind::Bidirectional:
      for (std::size_t k = 0; k < annotations.bottom_up.size(); ++k) {
        out.push_back({static_cast<int>(k) + 1,
                       tape.concat({annotations.bottom_up[k], annotations.top_down[k]})});
      }
      break;
  }
  return out;
}

STNMT_END_NAMESPACE
