#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "stnmt/infer.hpp"
#include "stnmt/optim.hpp"
#include "test_support.hpp"

using namespace stnmt;
using namespace stnmt::testing;

namespace {

struct Instance {
  std::vector<int> source;
  BinaryTree tree;
};

Instance random_instance(std::mt19937_64& rng, std::size_t src_vocab, std::size_t max_len = 5) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<int> word(3, static_cast<int>(src_vocab) - 1);
  Instance in;
  in.source.resize(len(rng));
  for (int& w : in.source) w = word(rng);
  const Sentence words = synthetic_words(in.source);
  in.tree = index_nodes(random_binary_raw_tree(words, rng), words);
  return in;
}

// Every non-PAD sequence of length <= 2 that a decoder could return.
std::vector<std::vector<int>> all_short_outputs(int vocab) {
  std::vector<std::vector<int>> out{{kEos}};
  for (int a = 1; a < vocab; ++a) {
    if (a == kEos) continue;
    for (int b = 1; b < vocab; ++b) out.push_back({a, b});
  }
  return out;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  return out;
}

}  // namespace

TEST(Greedy, ZeroParametersEmitEosImmediately) {
  for (const auto& [enc, cov] : valid_modes()) {
    Model m(tiny_config(enc, cov), 1);
    zero(m.params());
    std::mt19937_64 rng(1);
    const Instance in = random_instance(rng, 7);
    const Hypothesis h = greedy_decode(m, in.source, &in.tree);
    EXPECT_EQ(h.tokens, std::vector<int>{kEos});
    EXPECT_TRUE(h.finished());
    EXPECT_NEAR(h.log_prob, -std::log(6.0), 1e-12);
    const Hypothesis b = beam_decode(m, in.source, &in.tree, {.beam = 4});
    EXPECT_EQ(b.tokens, std::vector<int>{kEos});
  }
}

TEST(Greedy, MaxLenBoundsOutput) {
  Model m(tiny_config(EncoderKind::Sequential, CoverageKind::None), 1);
  randomize(m.params(), 2, 1.0);
  m.params().at("out.b_o").values()[kEos] = -50;
  const std::vector<int> src{3, 4, 5};
  EXPECT_EQ(greedy_decode(m, src, nullptr, 1).tokens.size(), 1u);
  EXPECT_EQ(greedy_decode(m, src, nullptr).tokens.size(), default_max_len(3));
  EXPECT_EQ(default_max_len(3), 11u);
  const Hypothesis b = beam_decode(m, src, nullptr, {.beam = 3, .max_len = 2});
  EXPECT_EQ(b.tokens.size(), 2u);
  EXPECT_FALSE(b.finished());
}

TEST(Greedy, LogProbMatchesTeacherForcing) {
  Model m(tiny_config(EncoderKind::Bidirectional, CoverageKind::Tree), 1);
  randomize(m.params(), 3, 1.0);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    const Instance in = random_instance(rng, 7);
    const Hypothesis h = greedy_decode(m, in.source, &in.tree);
    EXPECT_NEAR(h.log_prob, sequence_log_prob(m, in.source, &in.tree, h.tokens), 1e-12);
    ASSERT_EQ(h.trace.rows.size(), h.tokens.size());
    for (const auto& row : h.trace.rows) {
      EXPECT_EQ(row.size(), 2 * in.source.size() - 1);
      EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-5);
    }
  }
}

TEST(Beam, WidthOneEqualsGreedy) {
  std::mt19937_64 rng(4);
  std::size_t checked = 0;
  for (const auto& [enc, cov] : valid_modes()) {
    Model m(tiny_config(enc, cov), 1);
    randomize(m.params(), 10 + checked, 1.5);
    for (int i = 0; i < 13; ++i, ++checked) {
      const Instance in = random_instance(rng, 7);
      const Hypothesis g = greedy_decode(m, in.source, &in.tree);
      const Hypothesis b = beam_decode(m, in.source, &in.tree, {.beam = 1});
      EXPECT_EQ(g.tokens, b.tokens);
      EXPECT_EQ(g.log_prob, b.log_prob);
    }
  }
  EXPECT_GE(checked, 100u);
}

TEST(Beam, FullWidthMatchesExhaustiveSearch) {
  std::mt19937_64 rng(5);
  for (const auto& [enc, cov] : valid_modes()) {
    Model m(tiny_config(enc, cov), 1);
    randomize(m.params(), 20, 1.5);
    for (int i = 0; i < 5; ++i) {
      const Instance in = random_instance(rng, 7);
      std::vector<int> best;
      double best_lp = -1e300;
      for (const auto& seq : all_short_outputs(6)) {
        const double lp = sequence_log_prob(m, in.source, &in.tree, seq);
        if (lp > best_lp) {
          best_lp = lp;
          best = seq;
        }
      }
      const Hypothesis b = beam_decode(m, in.source, &in.tree, {.beam = 6, .max_len = 2});
      EXPECT_EQ(b.tokens, best);
      EXPECT_NEAR(b.log_prob, best_lp, 1e-12);
    }
  }
}

TEST(Beam, WiderBeamNeverScoresLower) {
  std::mt19937_64 rng(6);
  std::size_t runs = 0, violations = 0;
  Model m(tiny_config(EncoderKind::BottomUp, CoverageKind::Word, 7, 8), 1);
  for (int i = 0; i < 40; ++i) {
    randomize(m.params(), 100 + i, 1.5);
    const Instance in = random_instance(rng, 7);
    double previous = -1e300;
    for (std::size_t beam = 1; beam <= 6; ++beam) {
      const Hypothesis h = beam_decode(m, in.source, &in.tree, {.beam = beam, .max_len = 6});
      if (h.log_prob < previous - 1e-12) ++violations;
      previous = std::max(previous, h.log_prob);
      ++runs;
    }
  }
  EXPECT_EQ(violations, 0u) << "of " << runs;
}

TEST(Beam, Contracts) {
  Model m(tiny_config(EncoderKind::Sequential, CoverageKind::None), 1);
  const std::vector<int> src{3};
  EXPECT_THROW(beam_decode(m, src, nullptr, {.beam = 0}), ContractError);
}

TEST(Beam, LengthNormalisationChangesChoice) {
  Model m(tiny_config(EncoderKind::Sequential, CoverageKind::None), 1);
  zero(m.params());
  // Stopping immediately costs ln 1/0.3; a long run of the favourite token
  // costs less per step.
  auto b = m.params().at("out.b_o").values();
  b[kEos] = 0;
  b[3] = 2.5;
  const std::vector<int> src{3, 4};
  const Hypothesis plain = beam_decode(m, src, nullptr, {.beam = 3, .max_len = 4});
  const Hypothesis norm = beam_decode(m, src, nullptr, {.beam = 3, .max_len = 4, .length_norm = true});
  EXPECT_GE(plain.log_prob, norm.log_prob);
  EXPECT_GE(norm.log_prob / static_cast<double>(norm.tokens.size()),
            plain.log_prob / static_cast<double>(plain.tokens.size()));
}

TEST(DecodeCorpus, ThreadsDoNotChangeOutput) {
  const SyntheticTask task = copy_task(20, 3, 6, 6, 9);
  Model m(tiny_config(EncoderKind::Bidirectional, CoverageKind::Tree, task.source_vocab, task.target_vocab), 1);
  randomize(m.params(), 7, 1.0);
  for (std::size_t beam : {1u, 3u}) {
    const auto one = decode_corpus(m, task.examples, {.beam = beam}, 1);
    const auto four = decode_corpus(m, task.examples, {.beam = beam}, 4);
    ASSERT_EQ(one.size(), task.examples.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
      EXPECT_EQ(one[i].tokens, four[i].tokens);
      EXPECT_EQ(one[i].log_prob, four[i].log_prob);
    }
  }
}

TEST(Attention, TreeModeExportsElevenColumnsForSixLeaves) {
  Model m(tiny_config(EncoderKind::BottomUp, CoverageKind::Tree), 1);
  randomize(m.params(), 8);
  const std::vector<int> src{3, 4, 5, 6, 3, 4};
  const std::vector<std::string> words{"x1", "x2", "x3", "x4", "x5", "x6"};
  const BinaryTree tree = read_binary_tree("(x1 (x2 (x3 ((x4 x5) x6))))", words);
  const Hypothesis h = greedy_decode(m, src, &tree, 4);
  std::vector<std::string> target;
  for (std::size_t i = 0; i < h.tokens.size(); ++i) target.push_back("y" + std::to_string(i));
  const std::string csv = export_attention(h.trace, target, words);
  std::stringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "target,x1,x2,x3,x4,x5,x6,[7],[8],[9],[10],[11]");
  std::size_t rows = 0;
  while (std::getline(ss, line)) {
    const auto fields = split_line(line);
    ASSERT_EQ(fields.size(), 12u);
    double sum = 0;
    for (std::size_t c = 1; c < fields.size(); ++c) {
      EXPECT_EQ(fields[c].size(), 6u) << fields[c];
      sum += std::stod(fields[c]);
    }
    EXPECT_NEAR(sum, 1.0, 1e-3);
    ++rows;
  }
  EXPECT_EQ(rows, h.tokens.size());
}

TEST(Attention, SequentialModeHasWordColumnsOnly) {
  Model m(tiny_config(EncoderKind::Sequential, CoverageKind::Word), 1);
  randomize(m.params(), 8);
  const std::vector<int> src{3, 4, 5};
  const std::vector<std::string> words{"a,b", "say \"hi\"", "c"};
  const Hypothesis h = greedy_decode(m, src, nullptr, 2);
  const std::vector<std::string> target(h.tokens.size(), "t");
  const std::string csv = export_attention(h.trace, target, words);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "target,\"a,b\",\"say \"\"hi\"\"\",c");
  EXPECT_EQ(csv.find('['), std::string::npos);
  EXPECT_THROW(export_attention(h.trace, std::vector<std::string>{}, words), ContractError);
}

TEST(Greedy, TrainedCopyModelCopies) {
  const SyntheticTask task = copy_task(6, 3, 4, 5, 2);
  ModelConfig cfg = tiny_config(EncoderKind::BottomUp, CoverageKind::None, task.source_vocab,
                                task.target_vocab);
  cfg.dims = ModelDims::desk();
  Model m(cfg, 3);
  TrainConfig tc;
  tc.batch_size = 1;
  tc.epochs = 300;
  tc.on_epoch = [](const EpochLog& log, const Model&) { return log.mean_loss > 0.005; };
  train(m, task.examples, tc);
  for (const auto& ex : task.examples) {
    EXPECT_EQ(greedy_decode(m, ex.source, &*ex.tree).tokens, ex.target);
  }
}
