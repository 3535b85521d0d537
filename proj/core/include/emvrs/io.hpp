#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace emvrs {

/// Shortest round-trip decimal representation, independent of the C locale.
std::string format_double(double v);

/// Parses a full-string decimal number; returns false on any trailing garbage.
bool parse_double(std::string_view text, double& out);

/// Splits one CSV line on commas (no quoting support; the schemas here never quote).
std::vector<std::string> split_csv_line(std::string_view line);

std::string read_file(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: truncate then write, throws on failure.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

}  // namespace emvrs
