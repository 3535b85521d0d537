#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "emvrs/losses.hpp"
#include "emvrs/market_data.hpp"
#include "emvrs/policy.hpp"
#include "emvrs/sim_trainer.hpp"

namespace emvrs {

struct RealTrainConfig {
  TimeGrid grid;
  double xi = 0.5;
  double x0 = 1.0;
  double z = 1.4;
  ActionConstraint constraint;
  /// sigma and rho of the first window; rates are filled from the data.
  MarketParams theta0;
  LearnSettings settings;
  LossKind loss = LossKind::kOC;
  std::uint64_t seed = 20240101;
  unsigned threads = 1;

  std::size_t regimes() const { return theta0.regimes(); }
  void validate() const;
};

/// Ten-year monthly configuration with both regimes at sigma 0.2, rho 1.0.
RealTrainConfig table3_config(LossKind loss = LossKind::kOC, std::size_t regimes = 2);

/// Generator fitted to a label path observed every dt.
struct GeneratorEstimate {
  GeneratorMatrix q;
  Matrix counts;          ///< transition counts n_ij
  Matrix transition;      ///< row-normalised counts; unvisited rows stay put
  bool used_log = false;  ///< false when the matrix logarithm was unusable
};

/// Q = log(P_hat) / dt with negative off-diagonals zeroed and diagonals rebalanced;
/// falls back to (P_hat - I) / dt when the logarithm is not real and finite.
GeneratorEstimate estimate_generator(const std::vector<std::size_t>& labels, std::size_t n_states,
                                     double dt);

/// Mean observed rate per label; labels never visited get the overall mean.
std::vector<double> regime_rates(const std::vector<double>& rates,
                                 const std::vector<std::size_t>& labels, std::size_t n_states);

/// Monthly training data for one window: K+1 rows, prices normalised by the first.
struct RealWindow {
  Date start;
  Date end;
  MarketSeries monthly;  ///< labelled
  HmmModel hmm;          ///< empty for single-regime windows
};

/// Fits the HMM to the window's daily log returns, labels by Viterbi and samples
/// the first row plus `months` month ends.
RealWindow prepare_window(const SeriesWindow& window, std::size_t n_states, std::size_t months,
                          std::uint64_t seed);

struct RealPath {
  EpochPath path;
  std::vector<double> actions;  ///< K clipped amounts
};

/// X_{k+1} = u_k S_{k+1}/S_k + (X_k - u_k)(1 + r_k dt), with u_k drawn from the policy.
RealPath wealth_path_real(const MarketSeries& monthly, const MarketParams& theta,
                          const ValueCoefficients& coeffs, const InvestmentTarget& target,
                          const ActionConstraint& constraint, Rng& rng);

struct RealTrainResult {
  ParameterHistory history;
  GeneratorMatrix q;
  std::vector<double> rates;
};

/// Epoch loop on a fixed observed window; exploration is the only randomness.
RealTrainResult train_real(const MarketSeries& monthly, const RealTrainConfig& config,
                           std::size_t window_index = 0);

/// Trains the windows in order, each starting from the previous final estimate.
std::vector<RealTrainResult> train_windows(const std::vector<RealWindow>& windows,
                                           const RealTrainConfig& config);

}  // namespace emvrs
