#include "emvrs/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "emvrs/error.hpp"

namespace emvrs {

void InvestmentTarget::validate() const {
  if (!(x0 > 0.0)) throw ArgumentError("initial wealth x0 must be > 0");
  if (!(z > 0.0)) throw ArgumentError("target wealth z must be > 0");
  if (!(xi > 0.0)) throw ArgumentError("exploration weight xi must be > 0");
  if (!std::isfinite(lambda)) throw ArgumentError("lambda must be finite");
}

double GaussianPolicy::stddev() const { return std::sqrt(variance); }

double GaussianPolicy::entropy() const {
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * variance);
}

double value_function(const ValueCoefficients& coeffs, std::size_t k, double x, std::size_t i,
                      const InvestmentTarget& target) {
  const auto row = static_cast<Eigen::Index>(k);
  const auto col = static_cast<Eigen::Index>(i);
  const double gap = target.lambda - target.z;
  const double y = x + gap * coeffs.h(row, col);
  return coeffs.p(row, col) * y * y + gap * gap * coeffs.c(row, col) + coeffs.d(row, col) -
         target.lambda * target.lambda;
}

double optimal_lambda(const ValueCoefficients& coeffs, double x0, std::size_t i0, double z) {
  const auto col = static_cast<Eigen::Index>(i0);
  const double p = coeffs.p(0, col);
  const double h = coeffs.h(0, col);
  const double denom = p * h * h + coeffs.c(0, col) - 1.0;
  if (std::abs(denom) < 1e-12) {
    throw NumericalError("optimal_lambda: degenerate configuration (P H^2 + C - 1 = 0)");
  }
  return (z - p * h * x0) / denom + z;
}

GaussianPolicy policy_distribution(const ValueCoefficients& coeffs, const MarketParams& theta,
                                   std::size_t k, double x, std::size_t i,
                                   const InvestmentTarget& target) {
  const auto row = static_cast<Eigen::Index>(k);
  const auto col = static_cast<Eigen::Index>(i);
  const double p = coeffs.p(row, col);
  if (!(p > 0.0)) {
    std::ostringstream msg;
    msg << "policy_distribution: P(t_" << k << ", regime " << (i + 1) << ") = " << p;
    throw NumericalError(msg.str());
  }
  // V_x = 2P[x + (lambda - z)H], V_xx = 2P; routing through pit_policy keeps the
  // two constructions identical to the last bit.
  const double y = x + (target.lambda - target.z) * coeffs.h(row, col);
  return pit_policy(2.0 * p * y, 2.0 * p, theta, i, target.xi);
}

double classical_control(const ValueCoefficients& coeffs, const MarketParams& theta, std::size_t k,
                         double x, std::size_t i, const InvestmentTarget& target) {
  return policy_distribution(coeffs, theta, k, x, i, target).mean;
}

GaussianPolicy pit_policy(double vx, double vxx, const MarketParams& theta, std::size_t i,
                          double xi) {
  if (!(vxx > 0.0)) throw NumericalError("pit_policy: value function must be convex (vxx > 0)");
  const double sigma = theta.sigma[i];
  return GaussianPolicy{-(theta.rho[i] / sigma) * (vx / vxx), xi / (sigma * sigma * vxx)};
}

double clip_action(double u, const ActionConstraint& constraint, double x0) {
  return std::clamp(u, constraint.lower(x0), constraint.upper(x0));
}

double sample_action(const GaussianPolicy& pol, const ActionConstraint& constraint, double x0,
                     Rng& rng) {
  if (!(constraint.multiple >= 0.0)) throw ArgumentError("action constraint must be >= 0");
  const double u = pol.mean + pol.stddev() * standard_normal(rng);
  return clip_action(u, constraint, x0);
}

double sample_action(const GaussianPolicy& pol, const ActionConstraint& constraint, double x0,
                     std::uint64_t seed) {
  Rng rng{seed};
  return sample_action(pol, constraint, x0, rng);
}

}  // namespace emvrs
