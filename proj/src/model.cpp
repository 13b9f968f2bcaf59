#include "stnmt/model.hpp"

#include <random>

STNMT_BEGIN_NAMESPACE

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ splitmix64(h));
}

constexpr double kInitRange = 0.08;

}  // namespace

std::string to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::Sequential: return "seq";
    case EncoderKind::BottomUp: return "tree";
    case EncoderKind::Bidirectional: return "bidir";
  }
  return "?";
}

std::string to_string(CoverageKind kind) {
  switch (kind) {
    case CoverageKind::None: return "none";
    case CoverageKind::Word: return "word";
    case CoverageKind::Tree: return "tree";
  }
  return "?";
}

EncoderKind parse_encoder_kind(std::string_view text) {
  if (text == "seq") return EncoderKind::Sequential;
  if (text == "tree") return EncoderKind::BottomUp;
  if (text == "bidir") return EncoderKind::Bidirectional;
  throw ConfigError("unknown encoder '" + std::string(text) + "' (expected seq, tree or bidir)");
}

CoverageKind parse_coverage_kind(std::string_view text) {
  if (text == "none") return CoverageKind::None;
  if (text == "word") return CoverageKind::Word;
  if (text == "tree") return CoverageKind::Tree;
  throw ConfigError("unknown coverage '" + std::string(text) + "' (expected none, word or tree)");
}

void ModelConfig::validate() const {
  const ModelDims& d = dims;
  if (!d.embedding || !d.seq_hidden || !d.tree_hidden || !d.decoder_hidden || !d.attention ||
      !d.readout) {
    throw ConfigError("model dimensions must be positive");
  }
  if (coverage != CoverageKind::None && d.coverage == 0) {
    throw ConfigError("coverage dimension must be positive when coverage is enabled");
  }
  if (uses_tree() && d.tree_hidden != 2 * d.seq_hidden) {
    throw ConfigError("tree hidden size " + std::to_string(d.tree_hidden) +
                      " must equal twice the sequential hidden size " +
                      std::to_string(d.seq_hidden));
  }
  if (coverage == CoverageKind::Tree && !uses_tree()) {
    throw ConfigError("tree coverage requires a tree encoder");
  }
  if (source_vocab < 1) throw ConfigError("source vocabulary is empty");
  if (target_vocab < 3) throw ConfigError("target vocabulary must contain the reserved symbols");
}

std::size_t ModelConfig::annotation_dim() const {
  switch (encoder) {
    case EncoderKind::Sequential: return 2 * dims.seq_hidden;
    case EncoderKind::BottomUp: return dims.tree_hidden;
    case EncoderKind::Bidirectional: return 2 * dims.tree_hidden;
  }
  return 0;
}

// -- ParameterSet ---------------------------------------------------------------

Tensor& ParameterSet::add(const std::string& name, Shape shape, bool bias) {
  if (contains(name)) throw ConfigError("duplicate parameter '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back(Entry{name, Tensor::zeros(std::move(shape), true), bias});
  return entries_.back().tensor;
}

Tensor& ParameterSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("missing parameter '" + name + "'");
  return entries_[it->second].tensor;
}

const Tensor& ParameterSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("missing parameter '" + name + "'");
  return entries_[it->second].tensor;
}

std::size_t ParameterSet::element_count() const {
  std::size_t n = 0;
  for (const Entry& e : entries_) n += e.tensor.size();
  return n;
}

std::vector<Tensor> ParameterSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const Entry& e : entries_) out.push_back(e.tensor);
  return out;
}

void ParameterSet::initialize(std::uint64_t seed) {
  for (Entry& e : entries_) {
    auto values = e.tensor.values();
    if (e.bias) {
      std::fill(values.begin(), values.end(), Real(0));
      continue;
    }
    std::mt19937_64 rng(stream_seed(seed, e.name));
    std::uniform_real_distribution<double> dist(-kInitRange, kInitRange);
    for (Real& v : values) v = static_cast<Real>(dist(rng));
  }
}

void ParameterSet::zero_grad() {
  for (Entry& e : entries_) e.tensor.zero_grad();
}

ParameterSet ParameterSet::clone() const {
  ParameterSet out;
  for (const Entry& e : entries_) {
    out.index_.emplace(e.name, out.entries_.size());
    Tensor t = e.tensor.clone();
    t.set_requires_grad(true);
    out.entries_.push_back(Entry{e.name, std::move(t), e.bias});
  }
  return out;
}

// -- weight groups ---------------------------------------------------------------

void GruWeights::declare(ParameterSet& p, const std::string& prefix, std::size_t in,
                         std::size_t hidden) {
  for (const char* gate : {"_r", "_z", ""}) {
    const std::string g(gate);
    p.add(prefix + ".W" + g, {hidden, in});
    p.add(prefix + ".U" + g, {hidden, hidden});
    p.add(prefix + ".b" + g, {hidden}, true);
  }
}

GruWeights GruWeights::bind(ParameterSet& p, const std::string& prefix) {
  GruWeights w;
  w.input_reset = p.at(prefix + ".W_r");
  w.hidden_reset = p.at(prefix + ".U_r");
  w.bias_reset = p.at(prefix + ".b_r");
  w.input_update = p.at(prefix + ".W_z");
  w.hidden_update = p.at(prefix + ".U_z");
  w.bias_update = p.at(prefix + ".b_z");
  w.input_cand = p.at(prefix + ".W");
  w.hidden_cand = p.at(prefix + ".U");
  w.bias_cand = p.at(prefix + ".b");
  return w;
}

namespace {
constexpr const char* kTreeGates[] = {"rL", "rR", "zL", "zR", "z"};
}

void TreeGruWeights::declare(ParameterSet& p, const std::string& prefix, std::size_t hidden) {
  for (const char* gate : kTreeGates) {
    const std::string g(gate);
    p.add(prefix + ".U_" + g + "_L", {hidden, hidden});
    p.add(prefix + ".U_" + g + "_R", {hidden, hidden});
    p.add(prefix + ".b_" + g, {hidden}, true);
  }
  p.add(prefix + ".U_L", {hidden, hidden});
  p.add(prefix + ".U_R", {hidden, hidden});
}

TreeGruWeights TreeGruWeights::bind(ParameterSet& p, const std::string& prefix) {
  auto gate = [&](const std::string& g) {
    return TreeGateWeights{p.at(prefix + ".U_" + g + "_L"), p.at(prefix + ".U_" + g + "_R"),
                           p.at(prefix + ".b_" + g)};
  };
  TreeGruWeights w;
  w.reset_left = gate("rL");
  w.reset_right = gate("rR");
  w.update_left = gate("zL");
  w.update_right = gate("zR");
  w.update_cand = gate("z");
  w.cand_left = p.at(prefix + ".U_L");
  w.cand_right = p.at(prefix + ".U_R");
  return w;
}

bool is_bottom_up_parameter(std::string_view name) {
  return name.starts_with("src.") || name.starts_with("enc.") || name.starts_with("tree_up.");
}

// -- Model ------------------------------------------------------------------------

ParameterSet Model::declare(const ModelConfig& config) {
  config.validate();
  const ModelDims& d = config.dims;
  const std::size_t ann = config.annotation_dim();
  ParameterSet p;

  p.add("src.embedding", {config.source_vocab, d.embedding});
  GruWeights::declare(p, "enc.fwd", d.embedding, d.seq_hidden);
  GruWeights::declare(p, "enc.bwd", d.embedding, d.seq_hidden);
  if (config.uses_tree()) TreeGruWeights::declare(p, "tree_up", d.tree_hidden);
  if (config.encoder == EncoderKind::Bidirectional) {
    p.add("tree_down.root.W", {d.tree_hidden, d.tree_hidden});
    p.add("tree_down.root.b", {d.tree_hidden}, true);
    GruWeights::declare(p, "tree_down.left", d.tree_hidden, d.tree_hidden);
    GruWeights::declare(p, "tree_down.right", d.tree_hidden, d.tree_hidden);
  }

  p.add("tgt.embedding", {config.target_vocab, d.embedding});
  p.add("dec.init.W", {d.decoder_hidden, ann});
  p.add("dec.init.b", {d.decoder_hidden}, true);
  GruWeights::declare(p, "dec.gru", d.embedding + ann, d.decoder_hidden);

  p.add("att.v", {d.attention});
  p.add("att.W", {d.attention, d.decoder_hidden});
  p.add("att.U", {d.attention, ann});
  if (config.coverage != CoverageKind::None) {
    p.add("att.V", {d.attention, d.coverage});
    std::size_t in = 1 + d.decoder_hidden + ann;
    if (config.coverage == CoverageKind::Tree) in += 2 * (d.coverage + 1);
    GruWeights::declare(p, "cov.gru", in, d.coverage);
  }

  p.add("out.W_t", {d.readout, d.embedding});
  p.add("out.W_d", {d.readout, d.decoder_hidden});
  p.add("out.W_c", {d.readout, ann});
  p.add("out.b", {d.readout}, true);
  p.add("out.W_o", {config.target_vocab, d.readout});
  p.add("out.b_o", {config.target_vocab}, true);
  return p;
}

Model::Model(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed), params_(declare(config_)) {
  params_.initialize(seed);
  bind();
}

Model::Model(ModelConfig config, ParameterSet params, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed) {
  const ParameterSet expected = declare(config_);
  if (expected.size() != params.size()) {
    throw ConfigError("parameter count " + std::to_string(params.size()) + " does not match the " +
                      std::to_string(expected.size()) + " the configuration declares");
  }
  for (const auto& e : expected.entries()) {
    if (!params.contains(e.name)) throw ConfigError("missing parameter '" + e.name + "'");
    const Tensor& t = params.at(e.name);
    if (t.shape() != e.tensor.shape()) {
      throw ConfigError("parameter '" + e.name + "' has shape " + to_string(t.shape()) +
                        ", configuration expects " + to_string(e.tensor.shape()));
    }
  }
  // Re-register in canonical order, keeping the supplied values.
  params_ = expected.clone();
  for (auto& e : params_.entries()) {
    const Tensor& src = params.at(e.name);
    std::copy(src.values().begin(), src.values().end(), e.tensor.values().begin());
  }
  bind();
}

Model Model::clone() const { return Model(config_, params_.clone(), seed_); }

void Model::bind() {
  ParameterSet& p = params_;
  encoder_.embedding = p.at("src.embedding");
  encoder_.forward = GruWeights::bind(p, "enc.fwd");
  encoder_.backward = GruWeights::bind(p, "enc.bwd");
  if (config_.uses_tree()) encoder_.bottom_up = TreeGruWeights::bind(p, "tree_up");
  if (config_.encoder == EncoderKind::Bidirectional) {
    encoder_.top_down = TopDownWeights{p.at("tree_down.root.W"), p.at("tree_down.root.b"),
                                       GruWeights::bind(p, "tree_down.left"),
                                       GruWeights::bind(p, "tree_down.right")};
  }

  decoder_.embedding = p.at("tgt.embedding");
  decoder_.init_weight = p.at("dec.init.W");
  decoder_.init_bias = p.at("dec.init.b");
  decoder_.gru = GruWeights::bind(p, "dec.gru");
  decoder_.attention.score = p.at("att.v");
  decoder_.attention.decoder = p.at("att.W");
  decoder_.attention.annotation = p.at("att.U");
  if (config_.coverage != CoverageKind::None) {
    decoder_.attention.coverage = p.at("att.V");
    decoder_.coverage = GruWeights::bind(p, "cov.gru");
  }
  decoder_.readout = ReadoutWeights{p.at("out.W_t"), p.at("out.W_d"), p.at("out.W_c"),
                                    p.at("out.b"),   p.at("out.W_o"), p.at("out.b_o")};
}

STNMT_END_NAMESPACE
