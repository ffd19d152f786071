#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace prdesc {

inline constexpr std::string_view kToolVersion = "0.1.0";

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// What a subcommand read and wrote. Holds no timestamps, so identical runs
/// produce identical manifests.
struct RunManifest {
  std::string command;
  std::string config_hash;                   // sha256 of the canonical config JSON
  std::map<std::string, std::string> inputs;  // path -> sha256
  std::optional<std::uint64_t> seed;
  std::vector<std::string> artifacts;
  std::string tool_version = std::string(kToolVersion);

  void add_input(const std::filesystem::path& path);
  void set_config(const nlohmann::json& config);
  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

}  // namespace prdesc
