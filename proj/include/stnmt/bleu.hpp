#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "stnmt/corpus.hpp"

namespace stnmt {

struct BleuStats {
  std::array<std::size_t, 4> correct{};
  std::array<std::size_t, 4> total{};
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;

  BleuStats& operator+=(const BleuStats& other);
};

struct BleuScore {
  double bleu = 0;                   // 0..100
  std::array<double, 4> precision{};  // percentages
  double brevity_penalty = 0;
  double ratio = 0;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;

  // BLEU = 71.65, 100.0/100.0/100.0/100.0 (BP=0.717, ratio=0.750, hyp_len=6, ref_len=8)
  std::string report() const;
};

// Case-insensitive sufficient statistics for one sentence. Counts are clipped
// by the maximum over references; the reference length is the closest one
// (shorter wins a tie).
BleuStats sentence_stats(const Sentence& hypothesis, std::span<const Sentence> references);

BleuScore score_stats(const BleuStats& stats);

// Corpus BLEU with one or more references per hypothesis.
BleuScore corpus_bleu(std::span<const Sentence> hypotheses,
                      std::span<const std::vector<Sentence>> references);
BleuScore corpus_bleu(std::span<const Sentence> hypotheses, std::span<const Sentence> references);

struct LengthBin {
  std::size_t lower = 0;  // exclusive
  std::size_t upper = 0;  // inclusive; 0 for the open-ended last bin
  std::size_t count = 0;
  BleuScore score;

  std::string label() const;  // "(10,20]" or ">50"
};

// Buckets sentences by source length into (0,w], (w,2w], ... up to `cap`,
// then one ">cap" bin. Empty bins are left out.
std::vector<LengthBin> length_bin_report(std::span<const std::size_t> source_lengths,
                                         std::span<const Sentence> hypotheses,
                                         std::span<const Sentence> references,
                                         std::size_t bin_width = 10, std::size_t cap = 50);

}  // namespace stnmt
