#pragma once

#include <cstddef>
#include <vector>

namespace emvrs {

struct Bounds {
  double lo = 0.0;
  double hi = 0.0;
  double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Per-regime market parameters. The learnable vector is
/// theta = (sigma_1..sigma_l, rho_1..rho_l); rates r are fixed.
struct MarketParams {
  std::vector<double> sigma;  ///< volatility, 1/sqrt(year)
  std::vector<double> rho;    ///< Sharpe ratio
  std::vector<double> r;      ///< risk-free rate, 1/year
  Bounds sigma_bounds{0.1, 1.0};
  Bounds rho_bounds{-2.0, 2.0};

  std::size_t regimes() const { return sigma.size(); }
  std::size_t learnable() const { return 2 * sigma.size(); }

  /// Learnable entry j in [0, 2l): sigmas first, then rhos.
  double theta(std::size_t j) const;
  double& theta(std::size_t j);
  std::vector<double> theta_vector() const;

  /// Copy with entry j shifted by delta (no clamping).
  MarketParams shifted(std::size_t j, double delta) const;
  /// Copy with every learnable entry clamped into its bounds.
  MarketParams clamped() const;
  bool within_bounds() const;

  /// Throws ArgumentError on size mismatch or non-positive sigma.
  void validate() const;
};

}  // namespace emvrs
