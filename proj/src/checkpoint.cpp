#include "stnmt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

STNMT_BEGIN_NAMESPACE

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw ConfigError("checkpoint truncated");
  }
  return v;
}

std::string get_bytes(std::istream& in, std::size_t n) {
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n))) {
    throw ConfigError("checkpoint truncated");
  }
  return s;
}

json dims_json(const ModelDims& d) {
  return json{{"embedding", d.embedding},       {"seq_hidden", d.seq_hidden},
              {"tree_hidden", d.tree_hidden},   {"coverage", d.coverage},
              {"decoder_hidden", d.decoder_hidden}, {"attention", d.attention},
              {"readout", d.readout}};
}

ModelConfig config_from_manifest(const json& m) {
  ModelConfig c;
  c.encoder = parse_encoder_kind(m.at("encoder").get<std::string>());
  c.coverage = parse_coverage_kind(m.at("coverage").get<std::string>());
  const json& d = m.at("dims");
  c.dims.embedding = d.at("embedding");
  c.dims.seq_hidden = d.at("seq_hidden");
  c.dims.tree_hidden = d.at("tree_hidden");
  c.dims.coverage = d.at("coverage");
  c.dims.decoder_hidden = d.at("decoder_hidden");
  c.dims.attention = d.at("attention");
  c.dims.readout = d.at("readout");
  c.source_vocab = m.at("source_vocab");
  c.target_vocab = m.at("target_vocab");
  return c;
}

json read_manifest(std::istream& in) {
  const std::string magic = get_bytes(in, 6);
  if (magic != kCheckpointMagic) throw ConfigError("not a checkpoint (bad magic bytes)");
  const std::uint32_t len = get_u32(in);
  try {
    return json::parse(get_bytes(in, len));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint manifest is not valid JSON: ") + e.what());
  }
}

}  // namespace

std::string manifest_json(const Model& model) {
  const ModelConfig& c = model.config();
  const json m{{"format", kCheckpointMagic},
               {"encoder", to_string(c.encoder)},
               {"coverage", to_string(c.coverage)},
               {"dims", dims_json(c.dims)},
               {"source_vocab", c.source_vocab},
               {"target_vocab", c.target_vocab},
               {"seed", model.seed()},
               {"parameters", model.params().size()}};
  return m.dump();
}

void write_checkpoint(std::ostream& out, const Model& model) {
  out.write(kCheckpointMagic, 6);
  const std::string manifest = manifest_json(model);
  put_u32(out, static_cast<std::uint32_t>(manifest.size()));
  out.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
  std::vector<float> buffer;
  for (const auto& e : model.params().entries()) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    const Shape& shape = e.tensor.shape();
    put_u32(out, static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) put_u32(out, static_cast<std::uint32_t>(d));
    buffer.assign(e.tensor.values().begin(), e.tensor.values().end());
    out.write(reinterpret_cast<const char*>(buffer.data()),
              static_cast<std::streamsize>(buffer.size() * sizeof(float)));
  }
}

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write checkpoint " + path.string());
    write_checkpoint(out, model);
    if (!out) throw ConfigError("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Model read_checkpoint(std::istream& in) {
  const json manifest = read_manifest(in);
  ModelConfig config = config_from_manifest(manifest);
  const std::size_t count = manifest.at("parameters");
  ParameterSet params;
  std::vector<float> buffer;
  for (std::size_t i = 0; i < count; ++i) {
    const std::string name = get_bytes(in, get_u32(in));
    const std::uint32_t rank = get_u32(in);
    if (rank < 1 || rank > 2) throw ConfigError("checkpoint parameter '" + name + "' has bad rank");
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(get_u32(in));
    Tensor& t = params.add(name, shape);
    buffer.resize(t.size());
    if (!in.read(reinterpret_cast<char*>(buffer.data()),
                 static_cast<std::streamsize>(buffer.size() * sizeof(float)))) {
      throw ConfigError("checkpoint truncated in parameter '" + name + "'");
    }
    std::copy(buffer.begin(), buffer.end(), t.values().begin());
  }
  return Model(config, std::move(params), manifest.value("seed", std::uint64_t{0}));
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

ModelConfig read_checkpoint_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  return config_from_manifest(read_manifest(in));
}

STNMT_END_NAMESPACE
