#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stnmt/errors.hpp"

namespace stnmt {

// n-ary parse as read from a bracketed file. Leaves carry a token and no
// children; internal nodes carry an optional label (kept for debugging only,
// the encoders never look at it).
struct RawTree {
  std::string label;
  std::string token;
  std::vector<RawTree> children;

  static RawTree leaf(std::string token) { return RawTree{{}, std::move(token), {}}; }
  static RawTree node(std::string label, std::vector<RawTree> children) {
    return RawTree{std::move(label), {}, std::move(children)};
  }

  bool is_leaf() const noexcept { return children.empty(); }
  std::size_t leaf_count() const;
  std::vector<std::string> leaves() const;
  bool has_labels() const;

  friend bool operator==(const RawTree&, const RawTree&) = default;
};

// How the first bare token after '(' is read.
//  Present: always a label (PTB style, "(NP a)").
//  Absent:  never a label, every bare token is a leaf ("((a b) c)").
//  Auto:    Present when the whole tree has PTB shape (every constituent is
//           either "(LABEL word)" or "(LABEL? (..) (..) ...)") and the root
//           carries a label or wraps a single constituent, Absent otherwise.
enum class TreeLabels { Auto, Present, Absent };

RawTree parse_bracketed(std::string_view text, TreeLabels labels = TreeLabels::Auto);

// Parses `text` and checks the leaves against `sentence`. When the reading
// Auto picks does not match, the other reading (labeled or unlabeled) is
// tried before giving up with AlignmentError.
RawTree parse_for_sentence(std::string_view text, std::span<const std::string> sentence);

std::string serialize(const RawTree& tree);

// Left-branching binarization: (X a b c) -> (X (X' a b) c). Unary chains
// collapse into their child. Leaf order is preserved and the function is
// idempotent.
RawTree binarize(const RawTree& tree);

// Strictly binary tree with the node numbering used by the encoders:
// leaves are 1..I in sentence order, internal nodes I+1..2I-1 in
// children-before-parents (post-order) order, so the root is 2I-1.
// Node ids are 1-based; 0 means "none".
class BinaryTree {
 public:
  using NodeId = int;

  BinaryTree() = default;

  std::size_t leaf_count() const noexcept { return words_.size(); }
  std::size_t node_count() const noexcept { return parent_.size() - 1; }
  NodeId root() const noexcept { return static_cast<NodeId>(node_count()); }

  bool is_leaf(NodeId k) const { return k >= 1 && k <= static_cast<NodeId>(leaf_count()); }
  NodeId parent(NodeId k) const { return parent_.at(k); }
  NodeId left(NodeId k) const { return left_.at(k); }
  NodeId right(NodeId k) const { return right_.at(k); }
  bool is_left_child(NodeId k) const;
  // First and last leaf covered by k, inclusive.
  std::pair<NodeId, NodeId> span(NodeId k) const;

  const std::vector<std::string>& words() const noexcept { return words_; }

  // Unlabeled bracketing, e.g. "(a (b c))"; a single leaf prints bare.
  std::string to_bracketed() const;
  RawTree to_raw() const;

  friend bool operator==(const BinaryTree&, const BinaryTree&) = default;

 private:
  std::vector<std::string> words_;
  // Indexed by node id; slot 0 unused.
  std::vector<NodeId> parent_{0};
  std::vector<NodeId> left_{0};
  std::vector<NodeId> right_{0};

  friend BinaryTree index_nodes(const RawTree&, std::span<const std::string>);
};

BinaryTree index_nodes(const RawTree& tree, std::span<const std::string> sentence);

// Convenience: parse, binarize and index one tree line against its sentence.
BinaryTree read_binary_tree(std::string_view text, std::span<const std::string> sentence);

}  // namespace stnmt
