#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "stnmt/model.hpp"

STNMT_BEGIN_NAMESPACE

// Layout (all integers little-endian):
//   "STNMT1"
//   u32 manifest length, manifest (UTF-8 JSON: mode, dims, vocab sizes, seed)
//   per parameter: u32 name length, name, u32 rank, u32 dims[rank],
//                  float32 values[prod(dims)]
inline constexpr char kCheckpointMagic[] = "STNMT1";

std::string manifest_json(const Model& model);

void write_checkpoint(std::ostream& out, const Model& model);
void save_checkpoint(const std::filesystem::path& path, const Model& model);

Model read_checkpoint(std::istream& in);
Model load_checkpoint(const std::filesystem::path& path);

// Only the manifest, for checking flags against a checkpoint.
ModelConfig read_checkpoint_config(const std::filesystem::path& path);

STNMT_END_NAMESPACE
