#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "stnmt/corpus.hpp"

namespace stnmt {

// Uniformly split leaves into a random binary bracketing.
RawTree random_binary_raw_tree(const Sentence& words, std::mt19937_64& rng);

// n-ary tree with arity 1..max_arity at every internal node (unary chains
// included) and optional phrase labels.
RawTree random_nary_tree(const Sentence& words, std::size_t max_arity, bool labels,
                         std::mt19937_64& rng);

struct SyntheticTask {
  std::vector<TrainingExample> examples;
  std::size_t source_vocab = 0;  // including the reserved ids
  std::size_t target_vocab = 0;
};

// Source word k (id k) is written "w<k>".
Sentence synthetic_words(const std::vector<int>& ids);

// Copy task: target = source + EOS, random binary tree per sentence.
SyntheticTask copy_task(std::size_t pairs = 200, std::size_t min_len = 3, std::size_t max_len = 8,
                        std::size_t vocab = 20, std::uint64_t seed = 7);

// Every sequence appears twice, once with a left-branching and once with a
// right-branching tree. The target writes the sequence in one of two disjoint
// target alphabets chosen by the tree, so only the tree tells them apart.
SyntheticTask bracket_task(std::size_t sequences = 100, std::size_t min_len = 4,
                           std::size_t max_len = 6, std::size_t vocab = 10, std::uint64_t seed = 11);

}  // namespace stnmt
