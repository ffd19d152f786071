#pragma once

#include <filesystem>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "prdesc/model.hpp"

namespace prdesc {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
  nlohmann::json meta = nlohmann::json::object();  // e.g. {"iter": 1000, "val_rougeL": 31.2}
};

/// Layout: one line of JSON header (format, version, config, float width, byte
/// order, tensor names and shapes, meta), then every tensor's values as
/// little-endian IEEE-754 doubles in header order, each tensor column-major.
void save_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint load_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const nlohmann::json& j);

}  // namespace prdesc
