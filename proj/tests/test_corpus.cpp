#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "stnmt/corpus.hpp"

using namespace stnmt;

namespace {

std::vector<Sentence> corpus_of(std::initializer_list<const char*> lines) {
  std::vector<Sentence> out;
  for (const char* l : lines) out.push_back(tokenize(l));
  return out;
}

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("stnmt_corpus_" + name);
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST(Vocabulary, ReservedThenFrequency) {
  const auto c = corpus_of({"a a b"});
  const Vocabulary v = Vocabulary::build(c, 2);
  EXPECT_EQ(v.size(), 5u);
  EXPECT_EQ(v.id("<pad>"), kPad);
  EXPECT_EQ(v.id("<eos>"), kEos);
  EXPECT_EQ(v.id("<unk>"), kUnk);
  EXPECT_EQ(v.id("a"), 3);
  EXPECT_EQ(v.id("b"), 4);
}

TEST(Vocabulary, ShortlistMapsRestToUnk) {
  const auto c = corpus_of({"a a b c"});
  const Vocabulary v = Vocabulary::build(c, 1);
  EXPECT_EQ(v.id("a"), 3);
  EXPECT_EQ(v.id("b"), kUnk);
  EXPECT_EQ(v.id("c"), kUnk);
  EXPECT_EQ(v.size(), 4u);
}

TEST(Vocabulary, TieGoesToFirstOccurrence) {
  const auto c = corpus_of({"a b a b"});
  const Vocabulary v = Vocabulary::build(c, 1);
  EXPECT_EQ(v.id("a"), 3);
  EXPECT_EQ(v.id("b"), kUnk);
}

TEST(Vocabulary, EmptyCorpusRejected) {
  std::vector<Sentence> empty;
  EXPECT_THROW(Vocabulary::build(empty, 10), ContractError);
}

TEST(Vocabulary, ShortlistNotBinding) {
  Sentence words;
  for (int i = 0; i < 50; ++i) words.push_back("t" + std::to_string(i));
  const std::vector<Sentence> c{words};
  EXPECT_EQ(Vocabulary::build(c).size(), 53u);
}

TEST(Vocabulary, EncodeDecodeRoundTrip) {
  const auto c = corpus_of({"the cat sat", "the dog"});
  const Vocabulary v = Vocabulary::build(c);
  const Sentence s = tokenize("the dog sat");
  EXPECT_EQ(v.decode(v.encode(s)), s);
  EXPECT_EQ(v.encode(tokenize("zebra")), std::vector<int>{kUnk});
  const std::vector<int> with_eos{v.id("cat"), kPad, kEos, v.id("dog")};
  EXPECT_EQ(v.decode(with_eos), tokenize("cat"));
}

TEST(Vocabulary, TsvRoundTrip) {
  const auto c = corpus_of({"x y y z"});
  const Vocabulary v = Vocabulary::build(c);
  std::stringstream ss;
  v.write_tsv(ss);
  EXPECT_EQ(ss.str().substr(0, 8), "<pad>\t0\n");
  const Vocabulary back = Vocabulary::read_tsv(ss);
  ASSERT_EQ(back.size(), v.size());
  for (int i = 0; i < static_cast<int>(v.size()); ++i) EXPECT_EQ(back.word(i), v.word(i));
}

TEST(Filter, Reasons) {
  Sentence long_src;
  for (int i = 0; i < 51; ++i) long_src.push_back("w");
  std::string long_tree = "(";
  for (int i = 0; i < 51; ++i) long_tree += i ? " w" : "w";
  long_tree += ")";
  const std::vector<RawPair> pairs{
      {long_src, long_tree, tokenize("short")},
      {tokenize("a b"), std::string(""), tokenize("x")},
      {tokenize("a b c"), std::string("((a b) c)"), tokenize("x y z")},
      {tokenize("a b"), std::string("((a b"), tokenize("x")},
      {tokenize("a b"), std::nullopt, tokenize("x")},
  };
  FilterStats stats;
  const auto kept = filter_pairs(pairs, FilterOptions{}, stats);
  EXPECT_EQ(stats.input, 5u);
  EXPECT_EQ(stats.kept, 1u);
  EXPECT_EQ(stats.dropped_length, 1u);
  EXPECT_EQ(stats.dropped_parse, 3u);
  EXPECT_EQ(stats.kept + stats.dropped_length + stats.dropped_parse + stats.dropped_empty, stats.input);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].tree->leaf_count(), 3u);
}

TEST(Filter, TargetLengthAndNoTreeMode) {
  Sentence long_tgt(51, "y");
  const std::vector<RawPair> pairs{{tokenize("a"), std::nullopt, long_tgt},
                                   {tokenize("a"), std::nullopt, tokenize("b")},
                                   {tokenize("a"), std::nullopt, Sentence{}}};
  FilterStats stats;
  FilterOptions opts;
  opts.require_tree = false;
  const auto kept = filter_pairs(pairs, opts, stats);
  EXPECT_EQ(kept.size(), 1u);
  EXPECT_EQ(stats.dropped_length, 1u);
  EXPECT_EQ(stats.dropped_empty, 1u);
}

TEST(Examples, TargetEndsWithEos) {
  const auto c = corpus_of({"a b"});
  const Vocabulary v = Vocabulary::build(c);
  const ParsedPair p{tokenize("a b"), std::nullopt, tokenize("b a")};
  const TrainingExample ex = make_example(p, v, v);
  EXPECT_EQ(ex.source, (std::vector<int>{3, 4}));
  EXPECT_EQ(ex.target, (std::vector<int>{4, 3, kEos}));
}

TEST(Batches, SizesAndDeterminism) {
  std::vector<TrainingExample> ex(5);
  for (int i = 0; i < 5; ++i) ex[static_cast<std::size_t>(i)].source = {i};
  const auto b = make_batches(ex, 2, 42);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0].size(), 2u);
  EXPECT_EQ(b[1].size(), 2u);
  EXPECT_EQ(b[2].size(), 1u);
  std::set<const TrainingExample*> seen;
  for (const auto& batch : b) seen.insert(batch.examples.begin(), batch.examples.end());
  EXPECT_EQ(seen.size(), 5u);

  const auto again = make_batches(ex, 2, 42);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(b[i].examples, again[i].examples);
  EXPECT_THROW(make_batches(ex, 0, 1), ContractError);
}

TEST(Batches, DifferentSeedsShuffleDifferently) {
  std::vector<TrainingExample> ex(40);
  const auto a = make_batches(ex, 40, 1);
  const auto b = make_batches(ex, 40, 2);
  EXPECT_NE(a[0].examples, b[0].examples);
}

TEST(Coverage, Percent) {
  const auto train = corpus_of({"a a a b"});
  const Vocabulary v = Vocabulary::build(train, 1);
  EXPECT_DOUBLE_EQ(token_coverage(train, v), 75.0);
}

TEST(Files, MisalignedCountsNamed) {
  const auto src = temp_file("src.txt", "a b\nc d\n");
  const auto tgt = temp_file("tgt.txt", "x\n");
  try {
    read_parallel(src, tgt, std::nullopt);
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("src.txt"), std::string::npos) << msg;
    EXPECT_NE(msg.find("2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("1"), std::string::npos) << msg;
  }
}

TEST(Files, ReadParallelWithTrees) {
  const auto src = temp_file("src2.txt", "a b\n");
  const auto tgt = temp_file("tgt2.txt", "x y\n");
  const auto trees = temp_file("trees2.txt", "(a b)\n");
  const auto pairs = read_parallel(src, tgt, trees);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].source, tokenize("a b"));
  EXPECT_EQ(*pairs[0].tree, "(a b)");
}
