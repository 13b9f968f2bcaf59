#include "stnmt/infer.hpp"

#include <algorithm>
#include <cstdio>
#include <thread>

STNMT_BEGIN_NAMESPACE

namespace {

struct Live {
  Hypothesis hyp;
  DecoderState state;
};

struct Candidate {
  double score;
  std::size_t parent;
  int token;
};

std::vector<Real> row_of(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

bool lex_less(const std::vector<int>& a, int ta, const std::vector<int>& b, int tb) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  // Prefixes come from hypotheses of equal length.
  return ta < tb;
}

double final_score(const Hypothesis& h, bool length_norm) {
  if (!length_norm || h.tokens.empty()) return h.log_prob;
  return h.log_prob / static_cast<double>(h.tokens.size());
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::size_t default_max_len(std::size_t source_len) { return 2 * source_len + 5; }

Hypothesis greedy_decode(const Model& model, std::span<const int> source, const BinaryTree* tree,
                         std::size_t max_len) {
  if (max_len == 0) max_len = default_max_len(source.size());
  Tape tape = Tape::inference();
  const EncodedSource enc = encode_source(tape, model, source, tree);
  DecoderState state = init_state(tape, enc.memory, model);

  Hypothesis h;
  h.trace.nodes = enc.memory.nodes;
  std::optional<int> previous;
  while (h.tokens.size() < max_len) {
    StepOutput out = decoder_step(tape, state, previous, enc.memory, model);
    const auto lp = out.log_probs.values();
    int best = -1;
    for (std::size_t k = 0; k < lp.size(); ++k) {
      if (static_cast<int>(k) == kPad) continue;
      if (best < 0 || lp[k] > lp[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
    }
    h.tokens.push_back(best);
    h.log_prob += lp[static_cast<std::size_t>(best)];
    h.trace.rows.push_back(row_of(out.attention.weights));
    state = std::move(out.state);
    if (best == kEos) break;
    previous = best;
  }
  return h;
}

Hypothesis beam_decode(const Model& model, std::span<const int> source, const BinaryTree* tree,
                       const DecodeOptions& options) {
  if (options.beam == 0) throw ContractError("beam_decode: beam must be at least 1");
  const std::size_t max_len = options.max_len ? options.max_len : default_max_len(source.size());
  Tape tape = Tape::inference();
  const EncodedSource enc = encode_source(tape, model, source, tree);

  std::vector<Live> live(1);
  live[0].state = init_state(tape, enc.memory, model);
  live[0].hyp.trace.nodes = enc.memory.nodes;
  std::vector<Hypothesis> finished;

  for (std::size_t step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<StepOutput> outs;
    std::vector<Candidate> cands;
    for (std::size_t p = 0; p < live.size(); ++p) {
      const auto& toks = live[p].hyp.tokens;
      std::optional<int> prev;
      if (!toks.empty()) prev = toks.back();
      outs.push_back(decoder_step(tape, live[p].state, prev, enc.memory, model));
      const auto lp = outs.back().log_probs.values();
      for (std::size_t k = 0; k < lp.size(); ++k) {
        if (static_cast<int>(k) == kPad) continue;
        cands.push_back({live[p].hyp.log_prob + lp[k], p, static_cast<int>(k)});
      }
    }
    const std::size_t width = std::min(options.beam - finished.size(), cands.size());
    const auto better = [&](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      return lex_less(live[a.parent].hyp.tokens, a.token, live[b.parent].hyp.tokens, b.token);
    };
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(width), cands.end(),
                      better);

    std::vector<Live> next;
    for (std::size_t c = 0; c < width; ++c) {
      const Candidate& cand = cands[c];
      Live child;
      child.hyp = live[cand.parent].hyp;
      child.hyp.tokens.push_back(cand.token);
      child.hyp.log_prob = cand.score;
      child.hyp.trace.rows.push_back(row_of(outs[cand.parent].attention.weights));
      if (cand.token == kEos) {
        finished.push_back(std::move(child.hyp));
      } else {
        child.state = outs[cand.parent].state;
        next.push_back(std::move(child));
      }
    }
    live = std::move(next);
  }
  for (auto& l : live) finished.push_back(std::move(l.hyp));

  const auto best = std::min_element(finished.begin(), finished.end(), [&](const Hypothesis& a,
                                                                            const Hypothesis& b) {
    const double sa = final_score(a, options.length_norm);
    const double sb = final_score(b, options.length_norm);
    if (sa != sb) return sa > sb;
    return std::lexicographical_compare(a.tokens.begin(), a.tokens.end(), b.tokens.begin(),
                                        b.tokens.end());
  });
  return std::move(*best);
}

double sequence_log_prob(const Model& model, std::span<const int> source, const BinaryTree* tree,
                         std::span<const int> tokens) {
  Tape tape = Tape::inference();
  const EncodedSource enc = encode_source(tape, model, source, tree);
  DecoderState state = init_state(tape, enc.memory, model);
  std::optional<int> previous;
  double total = 0;
  for (int t : tokens) {
    StepOutput out = decoder_step(tape, state, previous, enc.memory, model);
    total += out.log_probs[static_cast<std::size_t>(t)];
    state = std::move(out.state);
    previous = t;
  }
  return total;
}

std::vector<Hypothesis> decode_corpus(const Model& model, std::span<const TrainingExample> examples,
                                      const DecodeOptions& options, std::size_t threads) {
  std::vector<Hypothesis> out(examples.size());
  const auto run = [&](std::size_t i) {
    const auto& ex = examples[i];
    const BinaryTree* tree = ex.tree ? &*ex.tree : nullptr;
    out[i] = options.beam == 1 ? greedy_decode(model, ex.source, tree, options.max_len)
                               : beam_decode(model, ex.source, tree, options);
  };
  threads = std::max<std::size_t>(1, std::min(threads, examples.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < examples.size(); ++i) run(i);
    return out;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < examples.size(); i += threads) run(i);
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

std::string export_attention(const AttentionTrace& trace, std::span<const std::string> target_words,
                             std::span<const std::string> source_words) {
  if (target_words.size() != trace.rows.size()) {
    throw ContractError("export_attention: " + std::to_string(target_words.size()) +
                        " target words for " + std::to_string(trace.rows.size()) + " attention rows");
  }
  std::string csv = "target";
  for (int node : trace.nodes) {
    csv += ',';
    const auto idx = static_cast<std::size_t>(node);
    if (idx >= 1 && idx <= source_words.size()) {
      csv += csv_field(source_words[idx - 1]);
    } else {
      csv += "[" + std::to_string(node) + "]";
    }
  }
  csv += '\n';
  char buf[32];
  for (std::size_t r = 0; r < trace.rows.size(); ++r) {
    csv += csv_field(target_words[r]);
    for (Real a : trace.rows[r]) {
      std::snprintf(buf, sizeof buf, ",%.4f", static_cast<double>(a));
      csv += buf;
    }
    csv += '\n';
  }
  return csv;
}

STNMT_END_NAMESPACE
