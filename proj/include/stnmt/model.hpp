#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stnmt/tensor.hpp"

STNMT_BEGIN_NAMESPACE

enum class EncoderKind { Sequential, BottomUp, Bidirectional };
enum class CoverageKind { None, Word, Tree };

// "seq" / "tree" / "bidir" and "none" / "word" / "tree".
std::string to_string(EncoderKind kind);
std::string to_string(CoverageKind kind);
EncoderKind parse_encoder_kind(std::string_view text);
CoverageKind parse_coverage_kind(std::string_view text);

struct ModelDims {
  std::size_t embedding = 16;
  std::size_t seq_hidden = 32;  // per direction
  std::size_t tree_hidden = 64;  // must be 2 * seq_hidden (leaf states are copied)
  std::size_t coverage = 8;
  std::size_t decoder_hidden = 32;
  std::size_t attention = 32;
  std::size_t readout = 16;

  static ModelDims desk() { return {}; }
  static ModelDims paper() { return {512, 1024, 2048, 50, 1024, 1024, 512}; }

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct ModelConfig {
  EncoderKind encoder = EncoderKind::Sequential;
  CoverageKind coverage = CoverageKind::None;
  ModelDims dims;
  std::size_t source_vocab = 0;
  std::size_t target_vocab = 0;

  // Throws ConfigError on inconsistent settings.
  void validate() const;
  bool uses_tree() const noexcept { return encoder != EncoderKind::Sequential; }
  std::size_t annotation_dim() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Ordered, named collection of trainable tensors. Matrices are initialised
// uniformly in [-0.08, 0.08] and biases to zero; each tensor draws from its own
// stream seeded by (seed, name), so a parameter's initial value does not
// depend on which other parameters exist.
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
    bool bias = false;
  };

  Tensor& add(const std::string& name, Shape shape, bool bias = false);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t element_count() const;
  std::vector<Entry>& entries() noexcept { return entries_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::vector<Tensor> tensors() const;

  void initialize(std::uint64_t seed);
  void zero_grad();
  ParameterSet clone() const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Standard GRU: r = s(W_r x + U_r h + b_r), z = s(W_z x + U_z h + b_z),
// h~ = tanh(W x + U (r*h) + b), h' = (1-z)*h + z*h~.
struct GruWeights {
  Tensor input_reset, hidden_reset, bias_reset;
  Tensor input_update, hidden_update, bias_update;
  Tensor input_cand, hidden_cand, bias_cand;

  static void declare(ParameterSet& params, const std::string& prefix, std::size_t input_dim,
                      std::size_t hidden_dim);
  static GruWeights bind(ParameterSet& params, const std::string& prefix);
};

// One gate of the Tree-GRU: s(from_left h_L + from_right h_R + bias).
struct TreeGateWeights {
  Tensor from_left, from_right, bias;
};

struct TreeGruWeights {
  TreeGateWeights reset_left, reset_right;
  TreeGateWeights update_left, update_right, update_cand;
  Tensor cand_left, cand_right;  // no bias on the candidate

  static void declare(ParameterSet& params, const std::string& prefix, std::size_t hidden_dim);
  static TreeGruWeights bind(ParameterSet& params, const std::string& prefix);
};

struct TopDownWeights {
  Tensor root_weight, root_bias;
  GruWeights left, right;  // picked by the node's position under its parent
};

struct EncoderWeights {
  Tensor embedding;
  GruWeights forward, backward;
  std::optional<TreeGruWeights> bottom_up;
  std::optional<TopDownWeights> top_down;
};

struct AttentionWeights {
  Tensor score;       // v_a, [attention]
  Tensor decoder;     // W_a, [attention x decoder_hidden]
  Tensor annotation;  // U_a, [attention x annotation]
  Tensor coverage;    // V_a, [attention x coverage]; undefined without coverage
};

struct ReadoutWeights {
  Tensor from_prev, from_state, from_context, bias;  // tanh mixer
  Tensor output, output_bias;                        // vocabulary logits
};

struct DecoderWeights {
  Tensor embedding;
  Tensor init_weight, init_bias;
  GruWeights gru;
  AttentionWeights attention;
  std::optional<GruWeights> coverage;
  ReadoutWeights readout;
};

// Parameter names owned by the bottom-up side of the network (source
// embeddings, sequential encoder, Tree-GRU). Two-phase training copies
// exactly these from the phase-1 model.
bool is_bottom_up_parameter(std::string_view name);

class Model {
 public:
  Model(ModelConfig config, std::uint64_t seed);
  // Adopts an existing parameter set (e.g. from a checkpoint); names and
  // shapes must match what `config` declares.
  Model(ModelConfig config, ParameterSet params, std::uint64_t seed = 0);

  Model(Model&&) = default;
  Model& operator=(Model&&) = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  Model clone() const;

  const ModelConfig& config() const noexcept { return config_; }
  // Seed the parameters were first initialised from (recorded in checkpoints).
  std::uint64_t seed() const noexcept { return seed_; }
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }
  const EncoderWeights& encoder() const noexcept { return encoder_; }
  const DecoderWeights& decoder() const noexcept { return decoder_; }

  // Names and shapes `config` requires, in registration order.
  static ParameterSet declare(const ModelConfig& config);

 private:
  void bind();

  ModelConfig config_;
  std::uint64_t seed_ = 0;
  ParameterSet params_;
  EncoderWeights encoder_;
  DecoderWeights decoder_;
};

STNMT_END_NAMESPACE
