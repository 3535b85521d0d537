#pragma once

#include <cstddef>

#include "emvrs/market_params.hpp"
#include "emvrs/random.hpp"
#include "emvrs/value_odes.hpp"

namespace emvrs {

/// Investor's mean-variance target. lambda is the current Lagrange multiplier,
/// refreshed once per epoch by the trainers.
struct InvestmentTarget {
  double x0 = 1.0;
  double z = 1.4;
  double xi = 0.5;
  double lambda = 0.0;

  void validate() const;
};

struct GaussianPolicy {
  double mean = 0.0;
  double variance = 1.0;

  double stddev() const;
  /// Differential entropy 0.5 log(2 pi e variance).
  double entropy() const;
};

/// V(t_k, x, i) = P [x + (lambda - z) H]^2 + (lambda - z)^2 C + D - lambda^2.
double value_function(const ValueCoefficients& coeffs, std::size_t k, double x, std::size_t i,
                      const InvestmentTarget& target);

/// Lagrange multiplier minimising V(0, x0, i0) over lambda. Throws NumericalError
/// when the quadratic degenerates (|P H^2 + C - 1| < 1e-12).
double optimal_lambda(const ValueCoefficients& coeffs, double x0, std::size_t i0, double z);

/// Optimal Gaussian policy: mean -(rho/sigma)[x + (lambda-z)H], variance xi / (2 sigma^2 P).
GaussianPolicy policy_distribution(const ValueCoefficients& coeffs, const MarketParams& theta,
                                   std::size_t k, double x, std::size_t i,
                                   const InvestmentTarget& target);

/// Non-exploratory optimal amount; identical to the policy mean.
double classical_control(const ValueCoefficients& coeffs, const MarketParams& theta, std::size_t k,
                         double x, std::size_t i, const InvestmentTarget& target);

/// Improved policy built from a value function's wealth derivatives.
/// Throws NumericalError when vxx <= 0.
GaussianPolicy pit_policy(double vx, double vxx, const MarketParams& theta, std::size_t i,
                          double xi);

/// Bounds applied to sampled actions: [-c x0, c x0] with short selling, else [0, c x0].
struct ActionConstraint {
  double multiple = 3.0;
  bool short_selling = true;

  double lower(double x0) const { return short_selling ? -multiple * x0 : 0.0; }
  double upper(double x0) const { return multiple * x0; }
};

/// Draws u ~ N(mean, variance) and clips it into the constraint interval.
double sample_action(const GaussianPolicy& pol, const ActionConstraint& constraint, double x0,
                     Rng& rng);
double sample_action(const GaussianPolicy& pol, const ActionConstraint& constraint, double x0,
                     std::uint64_t seed);

/// Clips an already drawn amount (shared by sampling and the constraint tests).
double clip_action(double u, const ActionConstraint& constraint, double x0);

}  // namespace emvrs
