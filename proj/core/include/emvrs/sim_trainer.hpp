#pragma once

// Training loop on a simulated regime-switching market. Each epoch fixes one
// Brownian path and one regime path, simulates wealth with the true market
// parameters driving the asset and the current estimate driving the policy,
// then moves the estimate along the TD gradient or the OC signal.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "emvrs/losses.hpp"

namespace emvrs {

/// When the per-epoch multiplier is refreshed relative to wealth simulation.
enum class LambdaTiming { kPreSim, kPostSim };

struct SimConfig {
  TimeGrid grid;
  GeneratorMatrix q;
  double xi = 0.5;
  double x0 = 1.0;
  double z = 1.4;
  MarketParams theta_true;  ///< also carries the fixed rates r_i
  MarketParams theta0;      ///< initial estimate; its r must equal theta_true.r
  LearnSettings settings;
  LossKind loss = LossKind::kOC;
  std::uint64_t seed = 20240101;
  LambdaTiming lambda_timing = LambdaTiming::kPreSim;
  unsigned threads = 1;

  void validate() const;
};

/// Toy two-regime configuration (only the drift differs between regimes).
SimConfig table1_config(LossKind loss = LossKind::kOC);
/// Two-regime configuration with regime-dependent drift, volatility and rate.
SimConfig table2_config();

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t initial_regime = 0;
  double lambda = 0.0;       ///< multiplier from this epoch's coefficients
  double td_loss = 0.0;      ///< realised TD loss at the current estimate
  double m_total = 0.0;      ///< sum of M increments
  std::vector<double> signals;  ///< per-parameter TD gradient or OC loss
};

/// theta[0] is the initial estimate; theta[n + 1] follows epoch n.
struct ParameterHistory {
  std::vector<MarketParams> theta;
  std::vector<EpochRecord> epochs;

  const MarketParams& final_theta() const { return theta.back(); }
};

/// Euler step of the exploratory wealth SDE written with the hybrid parameter
/// placement. Returns K+1 wealth values; throws NumericalError on non-finite wealth.
std::vector<double> simulate_wealth_path(const MarketParams& theta, const MarketParams& theta_true,
                                         const ValueCoefficients& coeffs,
                                         const RegimePath& regimes, const std::vector<double>& dw,
                                         const InvestmentTarget& target);

/// Drift and diffusion coefficients of the exploratory wealth SDE at one state
/// under the Gaussian policy `pol`, market (sigma, rho, r).
struct ExploratoryCoefficients {
  double drift = 0.0;
  double diffusion = 0.0;
};
ExploratoryCoefficients exploratory_coefficients(const GaussianPolicy& pol, double sigma, double rho,
                                                 double r, double x);

/// Brownian increments and regime path of epoch `epoch` (independent of theta).
struct EpochNoise {
  std::vector<double> dw;
  RegimePath regimes;
};
EpochNoise epoch_noise(const SimConfig& config, std::size_t epoch);

/// One full epoch at the given estimate: solves, lambda, wealth, signals.
/// `previous_lambda` is used for wealth simulation under LambdaTiming::kPostSim.
struct EpochOutcome {
  EpochPath path;
  EpochRecord record;
  MarketParams next_theta;
};
EpochOutcome run_sim_epoch(const SimConfig& config, const MarketParams& theta, std::size_t epoch,
                           std::optional<double> previous_lambda);

ParameterHistory train(const SimConfig& config);

/// CSV columns: epoch, sigma_i..., rho_i..., lambda, td_loss, m_total, signal_j...
void write_training_log(std::ostream& os, const ParameterHistory& history);

}  // namespace emvrs
