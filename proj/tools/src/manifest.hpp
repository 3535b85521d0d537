#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "config.hpp"

namespace emvrs::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Record of one command run: what went in and the hash of everything written.
class RunManifest {
 public:
  RunManifest(std::string command, const Json& effective_config, std::uint64_t seed);

  void add_stream(std::string_view name);
  void add_input(const std::filesystem::path& path);
  /// Writes `content` to `dir / name` and records its SHA-256.
  void emit(const std::filesystem::path& dir, const std::string& name, std::string_view content);
  /// Writes manifest.json into `dir`.
  void finish(const std::filesystem::path& dir);

  const std::vector<std::filesystem::path>& outputs() const { return paths_; }

 private:
  Json doc_;
  std::vector<std::filesystem::path> paths_;
};

std::string utc_timestamp();

}  // namespace emvrs::cli
