#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "stnmt/model.hpp"
#include "stnmt/synthetic.hpp"

namespace stnmt::testing {

// Plain reference arithmetic, independent of the tape.
using Vec = std::vector<double>;

inline Vec values(const Tensor& t) { return Vec(t.values().begin(), t.values().end()); }

inline Vec matvec(const Tensor& m, const Vec& x) {
  Vec y(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) y[r] += m.at(r, c) * x[c];
  }
  return y;
}

inline Vec plus(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline Vec times(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
  return a;
}

inline Vec sigm(Vec a) {
  for (double& x : a) x = 1.0 / (1.0 + std::exp(-x));
  return a;
}

inline Vec tanh_v(Vec a) {
  for (double& x : a) x = std::tanh(x);
  return a;
}

inline Vec join(const Vec& a, const Vec& b) {
  Vec out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

inline Vec gru(const Vec& h, const Vec& x, const GruWeights& w) {
  const Vec r = sigm(plus(plus(matvec(w.input_reset, x), matvec(w.hidden_reset, h)), values(w.bias_reset)));
  const Vec z =
      sigm(plus(plus(matvec(w.input_update, x), matvec(w.hidden_update, h)), values(w.bias_update)));
  const Vec c =
      tanh_v(plus(plus(matvec(w.input_cand, x), matvec(w.hidden_cand, times(r, h))), values(w.bias_cand)));
  Vec out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = (1 - z[i]) * h[i] + z[i] * c[i];
  return out;
}

inline Vec tree_gru(const Vec& hl, const Vec& hr, const TreeGruWeights& w) {
  auto gate = [&](const TreeGateWeights& g) {
    return sigm(plus(plus(matvec(g.from_left, hl), matvec(g.from_right, hr)), values(g.bias)));
  };
  const Vec rl = gate(w.reset_left), rr = gate(w.reset_right);
  const Vec zl = gate(w.update_left), zr = gate(w.update_right), z = gate(w.update_cand);
  const Vec cand = tanh_v(plus(matvec(w.cand_left, times(rl, hl)), matvec(w.cand_right, times(rr, hr))));
  Vec out(hl.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = zl[i] * hl[i] + zr[i] * hr[i] + z[i] * cand[i];
  return out;
}

inline ModelDims tiny_dims() {
  ModelDims d;
  d.embedding = 3;
  d.seq_hidden = 2;
  d.tree_hidden = 4;
  d.coverage = 2;
  d.decoder_hidden = 3;
  d.attention = 3;
  d.readout = 3;
  return d;
}

inline ModelConfig tiny_config(EncoderKind enc, CoverageKind cov, std::size_t src_vocab = 7,
                               std::size_t tgt_vocab = 6) {
  ModelConfig c;
  c.encoder = enc;
  c.coverage = cov;
  c.dims = tiny_dims();
  c.source_vocab = src_vocab;
  c.target_vocab = tgt_vocab;
  return c;
}

// Larger spread than the default initialiser so gradients are not all tiny.
inline void randomize(ParameterSet& params, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& e : params.entries()) {
    for (Real& v : e.tensor.values()) v = static_cast<Real>(u(rng));
  }
}

inline void zero(ParameterSet& params) {
  for (auto& e : params.entries()) {
    for (Real& v : e.tensor.values()) v = 0;
  }
}

inline Vec random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Vec v(n);
  for (double& x : v) x = u(rng);
  return v;
}

inline Tensor tensor_of(const Vec& v) {
  return Tensor::from({v.size()}, std::vector<Real>(v.begin(), v.end()));
}

// The eight (encoder, coverage) pairs the model accepts; tree coverage needs
// a tree encoder.
inline std::vector<std::pair<EncoderKind, CoverageKind>> valid_modes() {
  std::vector<std::pair<EncoderKind, CoverageKind>> out;
  for (auto e : {EncoderKind::Sequential, EncoderKind::BottomUp, EncoderKind::Bidirectional}) {
    for (auto c : {CoverageKind::None, CoverageKind::Word, CoverageKind::Tree}) {
      if (c == CoverageKind::Tree && e == EncoderKind::Sequential) continue;
      out.emplace_back(e, c);
    }
  }
  return out;
}

}  // namespace stnmt::testing
