#include "manifest.hpp"

#include <chrono>
#include <ctime>

#include "emvrs/io.hpp"

namespace emvrs::cli {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest::RunManifest(std::string command, const Json& effective_config, std::uint64_t seed) {
  const std::string dumped = effective_config.dump();
  doc_["tool"] = "emvrs";
  doc_["version"] = kToolVersion;
  doc_["command"] = std::move(command);
  doc_["config_sha256"] = sha256_hex(dumped);
  doc_["config"] = effective_config;
  doc_["seed"] = seed;
  doc_["streams"] = Json::array();
  doc_["inputs"] = Json::array();
  doc_["outputs"] = Json::array();
  doc_["started_utc"] = utc_timestamp();
}

void RunManifest::add_stream(std::string_view name) { doc_["streams"].push_back(name); }

void RunManifest::add_input(const std::filesystem::path& path) {
  doc_["inputs"].push_back({{"path", path.string()}, {"sha256", sha256_hex(read_file(path))}});
}

void RunManifest::emit(const std::filesystem::path& dir, const std::string& name,
                       std::string_view content) {
  const std::filesystem::path path = dir / name;
  write_file(path, content);
  paths_.push_back(path);
  doc_["outputs"].push_back({{"path", name}, {"bytes", content.size()}, {"sha256", sha256_hex(content)}});
}

void RunManifest::finish(const std::filesystem::path& dir) {
  doc_["finished_utc"] = utc_timestamp();
  write_file(dir / "manifest.json", doc_.dump(2) + "\n");
}

}  // namespace emvrs::cli
