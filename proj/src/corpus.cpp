#include "stnmt/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace stnmt {

Vocabulary::Vocabulary() {
  push(kPadWord);
  push(kEosWord);
  push(kUnkWord);
}

void Vocabulary::push(std::string word) {
  ids_.emplace(word, static_cast<int>(words_.size()));
  words_.push_back(std::move(word));
}

Vocabulary Vocabulary::build(std::span<const Sentence> corpus, std::size_t shortlist) {
  if (shortlist < 1) throw ContractError("build_vocab: shortlist must be at least 1");
  struct Entry {
    std::size_t count = 0;
    std::size_t first_seen = 0;
  };
  std::unordered_map<std::string, Entry> counts;
  std::vector<std::string> order;
  std::size_t tokens = 0;
  for (const Sentence& s : corpus) {
    for (const std::string& w : s) {
      ++tokens;
      if (w == kPadWord || w == kEosWord || w == kUnkWord) continue;
      auto [it, inserted] = counts.try_emplace(w, Entry{0, order.size()});
      if (inserted) order.push_back(w);
      ++it->second.count;
    }
  }
  if (tokens == 0) throw ContractError("build_vocab: empty corpus");

  std::stable_sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    return counts[a].count > counts[b].count;
  });
  Vocabulary v;
  for (std::size_t i = 0; i < order.size() && i < shortlist; ++i) v.push(order[i]);
  return v;
}

Vocabulary Vocabulary::read_tsv(std::istream& in) {
  Vocabulary v;
  v.words_.clear();
  v.ids_.clear();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      throw ConfigError("vocabulary line " + std::to_string(line_no) + ": expected word<TAB>id");
    }
    const std::string word = line.substr(0, tab);
    const int id = std::stoi(line.substr(tab + 1));
    if (id != static_cast<int>(v.words_.size())) {
      throw ConfigError("vocabulary line " + std::to_string(line_no) + ": id " + std::to_string(id) +
                        " out of sequence");
    }
    v.push(word);
  }
  if (v.words_.size() < kReservedCount || v.words_[kPad] != kPadWord ||
      v.words_[kEos] != kEosWord || v.words_[kUnk] != kUnkWord) {
    throw ConfigError("vocabulary must start with the reserved rows <pad>, <eos>, <unk>");
  }
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open vocabulary " + path.string());
  return read_tsv(in);
}

void Vocabulary::write_tsv(std::ostream& out) const {
  for (std::size_t i = 0; i < words_.size(); ++i) out << words_[i] << '\t' << i << '\n';
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write vocabulary " + path.string());
  write_tsv(out);
}

bool Vocabulary::contains(std::string_view word) const {
  return ids_.find(std::string(word)) != ids_.end();
}

int Vocabulary::id(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::word(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= words_.size()) {
    throw ContractError("vocabulary id " + std::to_string(id) + " out of range");
  }
  return words_[id];
}

std::vector<int> Vocabulary::encode(std::span<const std::string> words) const {
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const std::string& w : words) ids.push_back(id(w));
  return ids;
}

Sentence Vocabulary::decode(std::span<const int> ids) const {
  Sentence out;
  for (int i : ids) {
    if (i == kEos) break;
    if (i == kPad) continue;
    out.push_back(word(i));
  }
  return out;
}

// -- filtering and batching -------------------------------------------------------

std::vector<ParsedPair> filter_pairs(std::span<const RawPair> pairs, const FilterOptions& options,
                                     FilterStats& stats) {
  std::vector<ParsedPair> kept;
  for (const RawPair& pair : pairs) {
    ++stats.input;
    std::optional<BinaryTree> tree;
    const bool has_tree_text = pair.tree && pair.tree->find_first_not_of(" \t\r") != std::string::npos;
    if (has_tree_text) {
      try {
        tree = read_binary_tree(*pair.tree, pair.source);
      } catch (const ParseError&) {
      } catch (const AlignmentError&) {
      }
    }
    if (options.require_tree && !tree) {
      ++stats.dropped_parse;
      continue;
    }
    if (pair.source.size() > options.max_len || pair.target.size() > options.max_len) {
      ++stats.dropped_length;
      continue;
    }
    if (pair.source.empty() || pair.target.empty()) {
      ++stats.dropped_empty;
      continue;
    }
    ++stats.kept;
    kept.push_back(ParsedPair{pair.source, std::move(tree), pair.target});
  }
  return kept;
}

TrainingExample make_example(const ParsedPair& pair, const Vocabulary& source_vocab,
                             const Vocabulary& target_vocab) {
  TrainingExample ex;
  ex.source = source_vocab.encode(pair.source);
  ex.tree = pair.tree;
  ex.target = target_vocab.encode(pair.target);
  ex.target.push_back(kEos);
  return ex;
}

std::vector<Batch> make_batches(std::span<const TrainingExample> examples, std::size_t batch_size,
                                std::uint64_t seed) {
  if (batch_size < 1) throw ContractError("make_batches: batch size must be at least 1");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Batch> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    Batch b;
    for (std::size_t j = i; j < std::min(order.size(), i + batch_size); ++j) {
      b.examples.push_back(&examples[order[j]]);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

double token_coverage(std::span<const Sentence> corpus, const Vocabulary& vocab) {
  std::size_t total = 0, known = 0;
  for (const Sentence& s : corpus) {
    for (const std::string& w : s) {
      ++total;
      if (vocab.contains(w)) ++known;
    }
  }
  return total == 0 ? 100.0 : 100.0 * static_cast<double>(known) / static_cast<double>(total);
}

// -- I/O ---------------------------------------------------------------------------

Sentence tokenize(std::string_view line) {
  Sentence out;
  std::istringstream in{std::string(line)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string join(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_lines(const std::filesystem::path& path, std::span<const std::string> lines) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  for (const std::string& l : lines) out << l << '\n';
}

std::vector<RawPair> read_parallel(const std::filesystem::path& source,
                                   const std::filesystem::path& target,
                                   const std::optional<std::filesystem::path>& trees) {
  const auto src = read_lines(source);
  const auto tgt = read_lines(target);
  std::vector<std::string> tree_lines;
  if (trees) tree_lines = read_lines(*trees);
  auto mismatch = [](const std::filesystem::path& a, std::size_t na, const std::filesystem::path& b,
                     std::size_t nb) {
    return ConfigError("line counts differ: " + a.string() + " has " + std::to_string(na) + ", " +
                       b.string() + " has " + std::to_string(nb));
  };
  if (src.size() != tgt.size()) throw mismatch(source, src.size(), target, tgt.size());
  if (trees && tree_lines.size() != src.size()) {
    throw mismatch(source, src.size(), *trees, tree_lines.size());
  }
  std::vector<RawPair> pairs;
  pairs.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    RawPair p{tokenize(src[i]), std::nullopt, tokenize(tgt[i])};
    if (trees) p.tree = tree_lines[i];
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace stnmt
