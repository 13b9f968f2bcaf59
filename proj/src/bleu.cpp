#include "stnmt/bleu.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>

#include "stnmt/errors.hpp"

namespace stnmt {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

Sentence lowercase(const Sentence& s) {
  Sentence out = s;
  for (auto& w : out) {
    std::transform(w.begin(), w.end(), w.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  }
  return out;
}

NgramCounts ngrams(const Sentence& s, std::size_t n) {
  NgramCounts counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    ++counts[std::vector<std::string>(s.begin() + static_cast<std::ptrdiff_t>(i),
                                      s.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (std::size_t n = 0; n < 4; ++n) {
    correct[n] += other.correct[n];
    total[n] += other.total[n];
  }
  hyp_len += other.hyp_len;
  ref_len += other.ref_len;
  return *this;
}

BleuStats sentence_stats(const Sentence& hypothesis, std::span<const Sentence> references) {
  if (references.empty()) throw ContractError("bleu: every hypothesis needs a reference");
  const Sentence hyp = lowercase(hypothesis);
  std::vector<Sentence> refs;
  for (const auto& r : references) refs.push_back(lowercase(r));

  BleuStats st;
  st.hyp_len = hyp.size();
  std::size_t best = refs.front().size();
  for (const auto& r : refs) {
    const auto diff = [&](std::size_t len) {
      return len > hyp.size() ? len - hyp.size() : hyp.size() - len;
    };
    if (diff(r.size()) < diff(best) || (diff(r.size()) == diff(best) && r.size() < best)) {
      best = r.size();
    }
  }
  st.ref_len = best;

  for (std::size_t n = 1; n <= 4; ++n) {
    NgramCounts max_ref;
    for (const auto& r : refs) {
      for (const auto& [g, c] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], c);
    }
    for (const auto& [g, c] : ngrams(hyp, n)) {
      st.total[n - 1] += c;
      const auto it = max_ref.find(g);
      if (it != max_ref.end()) st.correct[n - 1] += std::min(c, it->second);
    }
  }
  return st;
}

BleuScore score_stats(const BleuStats& st) {
  BleuScore s;
  s.hyp_len = st.hyp_len;
  s.ref_len = st.ref_len;
  bool any_zero = false;
  double log_sum = 0;
  for (std::size_t n = 0; n < 4; ++n) {
    if (st.total[n] == 0 || st.correct[n] == 0) {
      any_zero = true;
      continue;
    }
    const double p = static_cast<double>(st.correct[n]) / static_cast<double>(st.total[n]);
    s.precision[n] = 100.0 * p;
    log_sum += std::log(p);
  }
  s.ratio = st.ref_len ? static_cast<double>(st.hyp_len) / static_cast<double>(st.ref_len) : 0;
  if (st.hyp_len == 0) {
    s.brevity_penalty = 0;
  } else if (st.hyp_len < st.ref_len) {
    s.brevity_penalty = std::exp(1.0 - static_cast<double>(st.ref_len) / static_cast<double>(st.hyp_len));
  } else {
    s.brevity_penalty = 1;
  }
  s.bleu = any_zero ? 0.0 : 100.0 * s.brevity_penalty * std::exp(log_sum / 4.0);
  return s;
}

std::string BleuScore::report() const {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "BLEU = %.2f, %.1f/%.1f/%.1f/%.1f (BP=%.3f, ratio=%.3f, hyp_len=%zu, ref_len=%zu)", bleu,
                precision[0], precision[1], precision[2], precision[3], brevity_penalty, ratio, hyp_len,
                ref_len);
  return buf;
}

BleuScore corpus_bleu(std::span<const Sentence> hypotheses,
                      std::span<const std::vector<Sentence>> references) {
  if (hypotheses.empty()) throw ContractError("bleu: empty corpus");
  if (hypotheses.size() != references.size()) {
    throw ContractError("bleu: " + std::to_string(hypotheses.size()) + " hypotheses but " +
                        std::to_string(references.size()) + " reference sets");
  }
  BleuStats total;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) total += sentence_stats(hypotheses[i], references[i]);
  return score_stats(total);
}

BleuScore corpus_bleu(std::span<const Sentence> hypotheses, std::span<const Sentence> references) {
  std::vector<std::vector<Sentence>> refs;
  refs.reserve(references.size());
  for (const auto& r : references) refs.push_back({r});
  return corpus_bleu(hypotheses, std::span<const std::vector<Sentence>>(refs));
}

std::string LengthBin::label() const {
  if (upper == 0) return ">" + std::to_string(lower);
  return "(" + std::to_string(lower) + "," + std::to_string(upper) + "]";
}

std::vector<LengthBin> length_bin_report(std::span<const std::size_t> source_lengths,
                                         std::span<const Sentence> hypotheses,
                                         std::span<const Sentence> references, std::size_t bin_width,
                                         std::size_t cap) {
  if (bin_width == 0) throw ContractError("length bins: width must be at least 1");
  if (source_lengths.size() != hypotheses.size() || hypotheses.size() != references.size()) {
    throw ContractError("length bins: lengths, hypotheses and references differ in size");
  }
  const std::size_t closed = (cap + bin_width - 1) / bin_width;
  std::vector<BleuStats> stats(closed + 1);
  std::vector<std::size_t> counts(closed + 1, 0);
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const std::size_t len = source_lengths[i];
    const std::size_t b = len > cap ? closed : (len == 0 ? 0 : (len - 1) / bin_width);
    stats[b] += sentence_stats(hypotheses[i], std::span<const Sentence>(&references[i], 1));
    ++counts[b];
  }
  std::vector<LengthBin> bins;
  for (std::size_t b = 0; b <= closed; ++b) {
    if (counts[b] == 0) continue;
    LengthBin bin;
    bin.lower = b == closed ? cap : b * bin_width;
    bin.upper = b == closed ? 0 : std::min(cap, (b + 1) * bin_width);
    bin.count = counts[b];
    bin.score = score_stats(stats[b]);
    bins.push_back(bin);
  }
  return bins;
}

}  // namespace stnmt
