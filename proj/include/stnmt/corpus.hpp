#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stnmt/treebank.hpp"

namespace stnmt {

using Sentence = std::vector<std::string>;

inline constexpr int kPad = 0;
inline constexpr int kEos = 1;
inline constexpr int kUnk = 2;
inline constexpr std::size_t kReservedCount = 3;
inline constexpr std::size_t kDefaultShortlist = 30000;

// Word <-> id map. Ids 0..2 are PAD, EOS and UNK; the shortlist follows in
// descending frequency, ties broken by first occurrence.
class Vocabulary {
 public:
  static inline const std::string kPadWord = "<pad>";
  static inline const std::string kEosWord = "<eos>";
  static inline const std::string kUnkWord = "<unk>";

  Vocabulary();

  static Vocabulary build(std::span<const Sentence> corpus, std::size_t shortlist = kDefaultShortlist);
  static Vocabulary read_tsv(std::istream& in);
  static Vocabulary load(const std::filesystem::path& path);

  void write_tsv(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;

  std::size_t size() const noexcept { return words_.size(); }
  bool contains(std::string_view word) const;
  int id(std::string_view word) const;
  const std::string& word(int id) const;

  std::vector<int> encode(std::span<const std::string> words) const;
  // Stops at the first EOS; PAD is dropped.
  Sentence decode(std::span<const int> ids) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  void push(std::string word);

  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

// One source sentence, its parse (absent for sequential-only corpora) and the
// EOS-terminated target.
struct TrainingExample {
  std::vector<int> source;
  std::optional<BinaryTree> tree;
  std::vector<int> target;
};

struct Batch {
  std::vector<const TrainingExample*> examples;
  std::size_t size() const noexcept { return examples.size(); }
};

struct RawPair {
  Sentence source;
  std::optional<std::string> tree;
  Sentence target;
};

struct ParsedPair {
  Sentence source;
  std::optional<BinaryTree> tree;
  Sentence target;
};

struct FilterOptions {
  std::size_t max_len = 50;
  bool require_tree = true;
};

struct FilterStats {
  std::size_t input = 0;
  std::size_t kept = 0;
  std::size_t dropped_length = 0;
  std::size_t dropped_parse = 0;
  std::size_t dropped_empty = 0;
};

// Drops pairs whose tree is missing or unparsable, then pairs where either
// side is longer than max_len, then pairs with an empty side.
std::vector<ParsedPair> filter_pairs(std::span<const RawPair> pairs, const FilterOptions& options,
                                     FilterStats& stats);

TrainingExample make_example(const ParsedPair& pair, const Vocabulary& source_vocab,
                             const Vocabulary& target_vocab);

// Deterministic shuffle under `seed`; every example lands in exactly one batch.
std::vector<Batch> make_batches(std::span<const TrainingExample> examples, std::size_t batch_size,
                                std::uint64_t seed);

// Fraction (in percent) of tokens that are inside the vocabulary.
double token_coverage(std::span<const Sentence> corpus, const Vocabulary& vocab);

// -- plain-text I/O ------------------------------------------------------------

Sentence tokenize(std::string_view line);
std::string join(std::span<const std::string> words);
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, std::span<const std::string> lines);

// Reads line-aligned source/target files and an optional tree file.
// Throws ConfigError naming the files when line counts differ.
std::vector<RawPair> read_parallel(const std::filesystem::path& source,
                                   const std::filesystem::path& target,
                                   const std::optional<std::filesystem::path>& trees);

}  // namespace stnmt
