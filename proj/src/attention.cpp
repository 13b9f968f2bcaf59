#include "stnmt/attention.hpp"

STNMT_BEGIN_NAMESPACE

AttentionMemory make_memory(Tape& tape, std::span<const NodeAnnotation> annotations,
                            const BinaryTree* tree, const AttentionWeights& w) {
  if (annotations.empty()) throw ContractError("attention needs at least one annotation");
  AttentionMemory m;
  std::vector<Tensor> rows;
  rows.reserve(annotations.size());
  for (const NodeAnnotation& a : annotations) {
    m.nodes.push_back(a.node);
    rows.push_back(a.vector);
  }
  m.annotations = tape.stack_rows(rows);
  m.keys = tape.linear(m.annotations, w.annotation);
  m.left_rows.assign(m.size(), -1);
  m.right_rows.assign(m.size(), -1);
  m.tree = tree != nullptr && annotations.size() == tree->node_count();
  if (m.tree) {
    for (std::size_t r = 0; r < m.size(); ++r) {
      const int k = m.nodes[r];
      if (tree->is_leaf(k)) continue;
      m.left_rows[r] = tree->left(k) - 1;
      m.right_rows[r] = tree->right(k) - 1;
    }
  }
  return m;
}

AttentionResult attend(Tape& tape, const Tensor& d_prev, const AttentionMemory& memory,
                       const Tensor* coverage, const AttentionWeights& w) {
  Tensor pre = tape.add_bias(memory.keys, tape.linear(d_prev, w.decoder));
  if (coverage != nullptr) {
    if (!w.coverage.defined()) {
      throw ConfigError("attend: coverage supplied but the model has no coverage projection");
    }
    pre = tape.add(pre, tape.linear(*coverage, w.coverage));
  }
  AttentionResult out;
  out.scores = tape.matvec(tape.tanh(pre), w.score);
  out.weights = tape.softmax(out.scores);
  out.context = tape.weighted_sum(out.weights, memory.annotations);
  return out;
}

Tensor update_coverage_word(Tape& tape, const Tensor& coverage, const Tensor& alpha,
                            const Tensor& d_prev, const AttentionMemory& memory,
                            const GruWeights& w) {
  const std::size_t n = memory.size();
  if (coverage.rows() != n || alpha.size() != n) {
    throw ShapeError("update_coverage_word: expected one coverage row and one weight per node");
  }
  const Tensor alpha_col = tape.reshape(alpha, {n, 1});
  return gru_cell(tape, coverage, {alpha_col, tape.repeat_rows(d_prev, n), memory.annotations}, w);
}

Tensor update_coverage_tree(Tape& tape, const Tensor& coverage, const Tensor& alpha,
                            const Tensor& d_prev, const AttentionMemory& memory,
                            const GruWeights& w) {
  if (!memory.tree) throw ConfigError("tree coverage requires tree-structured annotations");
  const std::size_t n = memory.size();
  if (coverage.rows() != n || alpha.size() != n) {
    throw ShapeError("update_coverage_tree: expected one coverage row and one weight per node");
  }
  const Tensor alpha_col = tape.reshape(alpha, {n, 1});
  return gru_cell(tape, coverage,
                  {alpha_col, tape.repeat_rows(d_prev, n), memory.annotations,
                   tape.gather_rows(coverage, memory.left_rows),
                   tape.gather_rows(alpha_col, memory.left_rows),
                   tape.gather_rows(coverage, memory.right_rows),
                   tape.gather_rows(alpha_col, memory.right_rows)},
                  w);
}

STNMT_END_NAMESPACE
