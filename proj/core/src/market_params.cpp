#include "emvrs/market_params.hpp"

#include <cmath>
#include <string>

#include "emvrs/error.hpp"

namespace emvrs {

double MarketParams::theta(std::size_t j) const {
  const std::size_t l = regimes();
  if (j >= 2 * l) throw ArgumentError("parameter index " + std::to_string(j + 1) + " out of range");
  return j < l ? sigma[j] : rho[j - l];
}

double& MarketParams::theta(std::size_t j) {
  const std::size_t l = regimes();
  if (j >= 2 * l) throw ArgumentError("parameter index " + std::to_string(j + 1) + " out of range");
  return j < l ? sigma[j] : rho[j - l];
}

std::vector<double> MarketParams::theta_vector() const {
  std::vector<double> out(sigma);
  out.insert(out.end(), rho.begin(), rho.end());
  return out;
}

MarketParams MarketParams::shifted(std::size_t j, double delta) const {
  MarketParams out = *this;
  out.theta(j) += delta;
  return out;
}

MarketParams MarketParams::clamped() const {
  MarketParams out = *this;
  for (double& s : out.sigma) s = sigma_bounds.clamp(s);
  for (double& p : out.rho) p = rho_bounds.clamp(p);
  return out;
}

bool MarketParams::within_bounds() const {
  for (double s : sigma)
    if (!sigma_bounds.contains(s)) return false;
  for (double p : rho)
    if (!rho_bounds.contains(p)) return false;
  return true;
}

void MarketParams::validate() const {
  if (sigma.empty()) throw ArgumentError("market parameters need at least one regime");
  if (rho.size() != sigma.size() || r.size() != sigma.size()) {
    throw ArgumentError("sigma, rho and r must have one entry per regime");
  }
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (!(sigma[i] > 0.0) || !std::isfinite(sigma[i])) {
      throw ArgumentError("sigma_" + std::to_string(i + 1) + " must be positive");
    }
    if (!std::isfinite(rho[i]) || !std::isfinite(r[i])) {
      throw ArgumentError("rho and r must be finite");
    }
  }
}

}  // namespace emvrs
