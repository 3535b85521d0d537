#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace emvrs {

using Rng = std::mt19937_64;

/// Named consumers of randomness. Each gets its own stream so that enabling or
/// disabling one consumer never shifts the draws seen by another.
enum class Stream : std::uint64_t {
  kBrownian = 1,
  kRegime = 2,
  kAction = 3,
  kHmmSynthetic = 4,
  kBacktest = 5,
};

std::string_view stream_name(Stream s);

/// splitmix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of the stream `s` for sub-index `index` (epoch, window, repeat...).
constexpr std::uint64_t derive_seed(std::uint64_t master, Stream s, std::uint64_t index = 0,
                                    std::uint64_t sub = 0) {
  return mix64(mix64(mix64(master) ^ static_cast<std::uint64_t>(s)) ^ mix64(index + 1) ^
               (mix64(sub + 0x51ED) << 1));
}

inline Rng make_rng(std::uint64_t master, Stream s, std::uint64_t index = 0, std::uint64_t sub = 0) {
  return Rng{derive_seed(master, s, index, sub)};
}

/// Standard normal draw via Box-Muller on the raw engine output, so the sequence
/// does not depend on the standard library's distribution implementation.
double standard_normal(Rng& rng);

/// Uniform draw in [0, 1) with 53 bits of resolution.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace emvrs
