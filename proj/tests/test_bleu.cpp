#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "stnmt/bleu.hpp"

using namespace stnmt;

namespace {

std::vector<Sentence> lines(std::initializer_list<const char*> ls) {
  std::vector<Sentence> out;
  for (const char* l : ls) out.push_back(tokenize(l));
  return out;
}

}  // namespace

TEST(Bleu, IdenticalIsHundred) {
  const auto h = lines({"a b c d", "the cat sat on the mat"});
  EXPECT_EQ(corpus_bleu(h, h).bleu, 100.0);
}

TEST(Bleu, ZeroFourGramPrecision) {
  const auto h = lines({"a b c d"});
  const auto r = lines({"a b c e"});
  EXPECT_EQ(corpus_bleu(h, r).bleu, 0.0);
}

TEST(Bleu, BrevityPenalty) {
  const auto h = lines({"a b c d e f"});
  const auto r = lines({"a b c d e f g h"});
  const BleuScore s = corpus_bleu(h, r);
  EXPECT_NEAR(s.bleu, 71.65, 0.01);
  EXPECT_NEAR(s.brevity_penalty, std::exp(1.0 - 8.0 / 6.0), 1e-12);
  for (double p : s.precision) EXPECT_EQ(p, 100.0);
  EXPECT_EQ(s.report(),
            "BLEU = 71.65, 100.0/100.0/100.0/100.0 (BP=0.717, ratio=0.750, hyp_len=6, ref_len=8)");
}

TEST(Bleu, CaseInsensitive) {
  const auto h = lines({"The Cat Sat Down"});
  const auto r = lines({"the cat sat down"});
  EXPECT_EQ(corpus_bleu(h, r).bleu, 100.0);
}

TEST(Bleu, ClippedCounts) {
  // "the the the the" vs "the cat": unigram clip 1/4, no bigram matches.
  const BleuStats st = sentence_stats(tokenize("the the the the"), lines({"the cat"}));
  EXPECT_EQ(st.correct[0], 1u);
  EXPECT_EQ(st.total[0], 4u);
  EXPECT_EQ(st.correct[1], 0u);
}

TEST(Bleu, MultiReferenceMaxClipAndClosestLength) {
  const std::vector<Sentence> refs = lines({"a a x y z w", "b a a"});
  const BleuStats st = sentence_stats(tokenize("a a a"), refs);
  EXPECT_EQ(st.correct[0], 2u);
  EXPECT_EQ(st.ref_len, 3u);
  // Equal distance: the shorter reference wins.
  const BleuStats tie = sentence_stats(tokenize("a b c d"), lines({"a b c d e f", "a b"}));
  EXPECT_EQ(tie.ref_len, 2u);
}

TEST(Bleu, HandComputedMixedCorpus) {
  // p1 = 7/8, p2 = 4/6, p3 = 2/4, p4 = 1/2, hyp 8, ref 9
  const auto h = lines({"a b c d", "e f g h"});
  const auto r = lines({"a b c d", "e x g h i"});
  const BleuScore s = corpus_bleu(h, r);
  const double expect =
      100.0 * std::exp(1.0 - 9.0 / 8.0) *
      std::exp((std::log(7.0 / 8) + std::log(4.0 / 6) + std::log(2.0 / 4) + std::log(1.0 / 2)) / 4);
  EXPECT_NEAR(s.bleu, expect, 1e-9);
}

TEST(Bleu, Errors) {
  std::vector<Sentence> empty;
  EXPECT_THROW(corpus_bleu(empty, empty), ContractError);
  const auto h = lines({"a"});
  const auto r = lines({"a", "b"});
  EXPECT_THROW(corpus_bleu(h, r), ContractError);
}

TEST(Bleu, PermutationInvariant) {
  auto h = lines({"a b c d e", "x y z w", "p q r s t u", "k l m n"});
  auto r = lines({"a b c d f", "x y z w", "p q r s t", "k l m o"});
  const double base = corpus_bleu(h, r).bleu;
  std::vector<std::size_t> idx{0, 1, 2, 3};
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<Sentence> hp, rp;
    for (auto i : idx) {
      hp.push_back(h[i]);
      rp.push_back(r[i]);
    }
    EXPECT_EQ(corpus_bleu(hp, rp).bleu, base);
  }
}

TEST(LengthBins, SingleBin) {
  const auto h = lines({"a b c d e", "f g h i j"});
  const std::vector<std::size_t> len{5, 5};
  const auto bins = length_bin_report(len, h, h);
  ASSERT_EQ(bins.size(), 1u);
  EXPECT_EQ(bins[0].label(), "(0,10]");
  EXPECT_EQ(bins[0].count, 2u);
  EXPECT_EQ(bins[0].score.bleu, 100.0);
}

TEST(LengthBins, PartitionAndOpenBin) {
  std::vector<Sentence> h;
  std::vector<std::size_t> len;
  for (std::size_t l : {1, 10, 11, 20, 35, 50, 51, 80}) {
    len.push_back(l);
    h.push_back(tokenize("a b c d e"));
  }
  const auto bins = length_bin_report(len, h, h);
  std::size_t total = 0;
  for (const auto& b : bins) {
    total += b.count;
    EXPECT_EQ(b.score.bleu, 100.0);
  }
  EXPECT_EQ(total, h.size());
  ASSERT_EQ(bins.size(), 5u);
  EXPECT_EQ(bins[0].label(), "(0,10]");
  EXPECT_EQ(bins[0].count, 2u);
  EXPECT_EQ(bins[1].label(), "(10,20]");
  EXPECT_EQ(bins[2].label(), "(30,40]");
  EXPECT_EQ(bins[3].label(), "(40,50]");
  EXPECT_EQ(bins[4].label(), ">50");
  EXPECT_EQ(bins[4].count, 2u);
  EXPECT_THROW(length_bin_report(len, h, h, 0), ContractError);
}
