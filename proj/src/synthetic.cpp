#include "stnmt/synthetic.hpp"

#include <algorithm>

namespace stnmt {

namespace {

RawTree build_binary(const Sentence& words, std::size_t lo, std::size_t hi, std::mt19937_64& rng) {
  if (hi - lo == 1) return RawTree::leaf(words[lo]);
  std::uniform_int_distribution<std::size_t> cut(lo + 1, hi - 1);
  const std::size_t mid = cut(rng);
  return RawTree::node("", {build_binary(words, lo, mid, rng), build_binary(words, mid, hi, rng)});
}

RawTree build_nary(const Sentence& words, std::size_t lo, std::size_t hi, std::size_t max_arity,
                   bool labels, std::mt19937_64& rng) {
  static const char* kLabels[] = {"S", "NP", "VP", "PP", "ADJP"};
  const std::string label = labels ? kLabels[rng() % 5] : "";
  if (hi - lo == 1) {
    RawTree leaf = RawTree::leaf(words[lo]);
    if (rng() % 4 == 0) return RawTree::node(label, {leaf});
    return labels ? RawTree::node(label, {leaf}) : leaf;
  }
  const std::size_t span = hi - lo;
  std::uniform_int_distribution<std::size_t> arity_dist(2, std::min(max_arity, span));
  const std::size_t arity = arity_dist(rng);
  std::vector<std::size_t> cuts;
  std::vector<std::size_t> pool;
  for (std::size_t i = lo + 1; i < hi; ++i) pool.push_back(i);
  std::shuffle(pool.begin(), pool.end(), rng);
  cuts.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(arity - 1));
  std::sort(cuts.begin(), cuts.end());
  cuts.insert(cuts.begin(), lo);
  cuts.push_back(hi);
  std::vector<RawTree> kids;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    kids.push_back(build_nary(words, cuts[c], cuts[c + 1], max_arity, labels, rng));
  }
  RawTree node = RawTree::node(label, std::move(kids));
  if (rng() % 8 == 0) return RawTree::node(label, {std::move(node)});
  return node;
}

RawTree branching(const Sentence& words, bool left) {
  RawTree t = RawTree::leaf(left ? words.front() : words.back());
  if (left) {
    for (std::size_t i = 1; i < words.size(); ++i) t = RawTree::node("", {t, RawTree::leaf(words[i])});
  } else {
    for (std::size_t i = words.size() - 1; i-- > 0;) t = RawTree::node("", {RawTree::leaf(words[i]), t});
  }
  return t;
}

std::vector<int> random_ids(std::size_t len, std::size_t vocab, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> word(static_cast<int>(kReservedCount),
                                          static_cast<int>(kReservedCount + vocab - 1));
  std::vector<int> ids(len);
  for (int& id : ids) id = word(rng);
  return ids;
}

}  // namespace

RawTree random_binary_raw_tree(const Sentence& words, std::mt19937_64& rng) {
  if (words.empty()) throw ContractError("random tree needs at least one word");
  return build_binary(words, 0, words.size(), rng);
}

RawTree random_nary_tree(const Sentence& words, std::size_t max_arity, bool labels,
                         std::mt19937_64& rng) {
  if (words.empty()) throw ContractError("random tree needs at least one word");
  if (max_arity < 2) throw ContractError("random tree arity must be at least 2");
  return build_nary(words, 0, words.size(), max_arity, labels, rng);
}

Sentence synthetic_words(const std::vector<int>& ids) {
  Sentence words;
  for (int id : ids) words.push_back("w" + std::to_string(id));
  return words;
}

SyntheticTask copy_task(std::size_t pairs, std::size_t min_len, std::size_t max_len, std::size_t vocab,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> length(min_len, max_len);
  SyntheticTask task;
  task.source_vocab = task.target_vocab = kReservedCount + vocab;
  for (std::size_t p = 0; p < pairs; ++p) {
    TrainingExample ex;
    ex.source = random_ids(length(rng), vocab, rng);
    const Sentence words = synthetic_words(ex.source);
    ex.tree = index_nodes(random_binary_raw_tree(words, rng), words);
    ex.target = ex.source;
    ex.target.push_back(kEos);
    task.examples.push_back(std::move(ex));
  }
  return task;
}

SyntheticTask bracket_task(std::size_t sequences, std::size_t min_len, std::size_t max_len,
                           std::size_t vocab, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> length(min_len, max_len);
  SyntheticTask task;
  task.source_vocab = kReservedCount + vocab;
  task.target_vocab = kReservedCount + 2 * vocab;
  for (std::size_t s = 0; s < sequences; ++s) {
    const std::vector<int> ids = random_ids(length(rng), vocab, rng);
    const Sentence words = synthetic_words(ids);
    for (bool left : {true, false}) {
      TrainingExample ex;
      ex.source = ids;
      ex.tree = index_nodes(branching(words, left), words);
      for (int id : ids) ex.target.push_back(left ? id : id + static_cast<int>(vocab));
      ex.target.push_back(kEos);
      task.examples.push_back(std::move(ex));
    }
  }
  return task;
}

}  // namespace stnmt
