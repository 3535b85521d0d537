#include "emvrs/random.hpp"

#include <cmath>
#include <numbers>

namespace emvrs {

std::string_view stream_name(Stream s) {
  switch (s) {
    case Stream::kBrownian: return "brownian";
    case Stream::kRegime: return "regime";
    case Stream::kAction: return "action";
    case Stream::kHmmSynthetic: return "hmm_synthetic";
    case Stream::kBacktest: return "backtest";
  }
  return "unknown";
}

double standard_normal(Rng& rng) {
  // One draw per call keeps the stream position a pure function of the call count.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace emvrs
