#pragma once

#include <cstdint>

#include "emvrs/market_data.hpp"

namespace emvrs::cli {

/// Bullish regime: sigma 0.15, rho 0.8, r 1%. Bearish: sigma 0.30, rho -0.6, r 0.5%.
/// Bull spells last two years on average, bear spells eight months.
inline SyntheticMarket fixture_market() {
  SyntheticMarket m;
  m.q = GeneratorMatrix::from_rows({{-0.5, 0.5}, {1.5, -1.5}});
  m.theta.sigma = {0.15, 0.30};
  m.theta.rho = {0.8, -0.6};
  m.theta.r = {0.01, 0.005};
  return m;
}

inline MarketSeries synthetic_fixture(const Date& first, double years, std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::kHmmSynthetic);
  return simulate_market(fixture_market(), first, years, 0, rng);
}

}  // namespace emvrs::cli
