#include "stnmt/treebank.hpp"

#include <cctype>
#include <functional>

namespace stnmt {

namespace {

// Untyped s-expression; the label/leaf reading is decided afterwards.
struct SExpr {
  bool is_list = false;
  std::string atom;
  std::vector<SExpr> items;
  std::size_t offset = 0;
};

class SExprReader {
 public:
  explicit SExprReader(std::string_view text) : text_(text) {}

  SExpr read_all() {
    skip_space();
    if (pos_ == text_.size()) throw ParseError("empty tree", pos_);
    SExpr top = read_item();
    skip_space();
    if (pos_ != text_.size()) throw ParseError("trailing input after tree", pos_);
    return top;
  }

 private:
  static bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

  void skip_space() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }

  SExpr read_item() {
    SExpr e;
    e.offset = pos_;
    const char c = text_[pos_];
    if (c == ')') throw ParseError("unbalanced ')'", pos_);
    if (c != '(') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && !is_space(text_[pos_]) && text_[pos_] != '(' &&
             text_[pos_] != ')') {
        ++pos_;
      }
      e.atom = std::string(text_.substr(start, pos_ - start));
      return e;
    }
    e.is_list = true;
    ++pos_;
    while (true) {
      skip_space();
      if (pos_ == text_.size()) throw ParseError("unbalanced '(': missing ')'", pos_);
      if (text_[pos_] == ')') {
        if (e.items.empty()) throw ParseError("empty constituent", e.offset);
        ++pos_;
        return e;
      }
      e.items.push_back(read_item());
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

bool all_lists(const SExpr& e, std::size_t from) {
  for (std::size_t i = from; i < e.items.size(); ++i) {
    if (!e.items[i].is_list) return false;
  }
  return true;
}

// PTB shape: "(LABEL word)" preterminals and "(LABEL? (..) ...)" phrases.
bool ptb_shape(const SExpr& e) {
  if (!e.is_list) return false;
  const auto& items = e.items;
  const bool preterminal = items.size() == 2 && !items[0].is_list && !items[1].is_list;
  if (preterminal) return true;
  if (!items[0].is_list) {
    if (items.size() < 2 || !all_lists(e, 1)) return false;
  } else if (!all_lists(e, 0)) {
    return false;
  }
  for (const SExpr& child : items) {
    if (child.is_list && !ptb_shape(child)) return false;
  }
  return true;
}

// An unlabeled root opens with a bracket and has two or more children.
bool looks_labeled(const SExpr& e) {
  if (!ptb_shape(e)) return false;
  return !e.items[0].is_list || e.items.size() == 1;
}

RawTree to_tree(const SExpr& e, bool labeled) {
  if (!e.is_list) return RawTree::leaf(e.atom);
  std::size_t first = 0;
  std::string label;
  if (labeled && !e.items[0].is_list) {
    if (e.items.size() < 2) throw ParseError("empty constituent", e.offset);
    label = e.items[0].atom;
    first = 1;
  }
  std::vector<RawTree> children;
  children.reserve(e.items.size() - first);
  for (std::size_t i = first; i < e.items.size(); ++i) {
    children.push_back(to_tree(e.items[i], labeled));
  }
  return RawTree::node(std::move(label), std::move(children));
}

void collect_leaves(const RawTree& t, std::vector<std::string>& out) {
  if (t.is_leaf()) {
    out.push_back(t.token);
    return;
  }
  for (const RawTree& c : t.children) collect_leaves(c, out);
}

void check_alignment(const std::vector<std::string>& leaves, std::span<const std::string> sentence) {
  const std::size_t n = std::min(leaves.size(), sentence.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (leaves[i] != sentence[i]) {
      throw AlignmentError("tree leaf " + std::to_string(i + 1) + " is '" + leaves[i] +
                           "' but the sentence has '" + sentence[i] + "'");
    }
  }
  if (leaves.size() != sentence.size()) {
    throw AlignmentError("tree has " + std::to_string(leaves.size()) + " leaves but the sentence has " +
                         std::to_string(sentence.size()) + " tokens");
  }
}

}  // namespace

// -- RawTree --------------------------------------------------------------------

std::size_t RawTree::leaf_count() const {
  if (is_leaf()) return 1;
  std::size_t n = 0;
  for (const RawTree& c : children) n += c.leaf_count();
  return n;
}

std::vector<std::string> RawTree::leaves() const {
  std::vector<std::string> out;
  collect_leaves(*this, out);
  return out;
}

bool RawTree::has_labels() const {
  if (is_leaf()) return false;
  if (!label.empty()) return true;
  for (const RawTree& c : children) {
    if (c.has_labels()) return true;
  }
  return false;
}

RawTree parse_bracketed(std::string_view text, TreeLabels labels) {
  const SExpr e = SExprReader(text).read_all();
  bool labeled = labels == TreeLabels::Present;
  if (labels == TreeLabels::Auto) {
    labeled = looks_labeled(e);
  }
  return to_tree(e, labeled);
}

RawTree parse_for_sentence(std::string_view text, std::span<const std::string> sentence) {
  const std::vector<std::string> words(sentence.begin(), sentence.end());
  RawTree tree = parse_bracketed(text, TreeLabels::Auto);
  if (tree.leaves() == words) return tree;
  try {
    RawTree other = parse_bracketed(text, tree.has_labels() ? TreeLabels::Absent : TreeLabels::Present);
    if (other.leaves() == words) return other;
  } catch (const ParseError&) {
  }
  check_alignment(tree.leaves(), sentence);
  return tree;
}

std::string serialize(const RawTree& tree) {
  if (tree.is_leaf()) return tree.token;
  std::string out = "(";
  if (!tree.label.empty()) out += tree.label + " ";
  for (std::size_t i = 0; i < tree.children.size(); ++i) {
    if (i) out += ' ';
    out += serialize(tree.children[i]);
  }
  out += ')';
  return out;
}

RawTree binarize(const RawTree& tree) {
  if (tree.is_leaf()) return tree;
  if (tree.children.size() == 1) return binarize(tree.children[0]);
  std::vector<RawTree> kids;
  kids.reserve(tree.children.size());
  for (const RawTree& c : tree.children) kids.push_back(binarize(c));
  if (kids.size() == 2) return RawTree::node(tree.label, std::move(kids));
  const std::string inner = tree.label.empty() ? std::string() : tree.label + "'";
  RawTree acc = RawTree::node(inner, {std::move(kids[0]), std::move(kids[1])});
  for (std::size_t i = 2; i + 1 < kids.size(); ++i) {
    acc = RawTree::node(inner, {std::move(acc), std::move(kids[i])});
  }
  return RawTree::node(tree.label, {std::move(acc), std::move(kids.back())});
}

// -- BinaryTree -----------------------------------------------------------------

bool BinaryTree::is_left_child(NodeId k) const {
  const NodeId p = parent(k);
  return p != 0 && left(p) == k;
}

std::pair<BinaryTree::NodeId, BinaryTree::NodeId> BinaryTree::span(NodeId k) const {
  NodeId first = k, last = k;
  while (!is_leaf(first)) first = left(first);
  while (!is_leaf(last)) last = right(last);
  return {first, last};
}

std::string BinaryTree::to_bracketed() const {
  std::function<std::string(NodeId)> visit = [&](NodeId k) -> std::string {
    if (is_leaf(k)) return words_[k - 1];
    return "(" + visit(left(k)) + " " + visit(right(k)) + ")";
  };
  return visit(root());
}

RawTree BinaryTree::to_raw() const {
  std::function<RawTree(NodeId)> visit = [&](NodeId k) -> RawTree {
    if (is_leaf(k)) return RawTree::leaf(words_[k - 1]);
    return RawTree::node({}, {visit(left(k)), visit(right(k))});
  };
  return visit(root());
}

BinaryTree index_nodes(const RawTree& tree, std::span<const std::string> sentence) {
  std::function<void(const RawTree&)> require_binary = [&](const RawTree& t) {
    if (t.is_leaf()) return;
    if (t.children.size() != 2) {
      throw ContractError("index_nodes: node '" + serialize(t) + "' has " +
                          std::to_string(t.children.size()) + " children; binarize first");
    }
    for (const RawTree& c : t.children) require_binary(c);
  };
  require_binary(tree);
  check_alignment(tree.leaves(), sentence);

  BinaryTree out;
  const std::size_t leaves = sentence.size();
  out.words_.assign(sentence.begin(), sentence.end());
  out.parent_.assign(2 * leaves, 0);
  out.left_.assign(2 * leaves, 0);
  out.right_.assign(2 * leaves, 0);

  using NodeId = BinaryTree::NodeId;
  NodeId next_leaf = 1;
  NodeId next_internal = static_cast<NodeId>(leaves) + 1;
  std::function<NodeId(const RawTree&)> visit = [&](const RawTree& t) -> NodeId {
    if (t.is_leaf()) return next_leaf++;
    const NodeId l = visit(t.children[0]);
    const NodeId r = visit(t.children[1]);
    const NodeId k = next_internal++;
    out.left_[k] = l;
    out.right_[k] = r;
    out.parent_[l] = k;
    out.parent_[r] = k;
    return k;
  };
  visit(tree);
  return out;
}

BinaryTree read_binary_tree(std::string_view text, std::span<const std::string> sentence) {
  return index_nodes(binarize(parse_for_sentence(text, sentence)), sentence);
}

}  // namespace stnmt
