#pragma once

// Martingale increments of M^theta, realised TD / OC losses, their
// central-difference ingredients and the parameter update rules.

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "emvrs/market_params.hpp"
#include "emvrs/policy.hpp"
#include "emvrs/regime_markov.hpp"
#include "emvrs/value_odes.hpp"

namespace emvrs {

enum class LossKind { kTD, kOC };

std::string_view loss_kind_name(LossKind kind);
/// Accepts "td" / "oc" (case-insensitive); throws ConfigError otherwise.
LossKind parse_loss_kind(std::string_view text);

/// Shape of the decay from the initial learning rate to the floor.
enum class RateSchedule { kGeometric, kLinear, kHarmonic };

struct LearnSettings {
  std::vector<double> eta;       ///< initial learning rate per learnable entry
  double eta_floor = 1e-5;       ///< rate reached at the last epoch
  std::vector<double> eps;       ///< central-difference step per entry
  std::size_t n_epochs = 10000;
  RateSchedule schedule = RateSchedule::kLinear;
  double decay_power = 1.0;      ///< geometric only: log-rate falls as frac^decay_power

  /// Decays eta[j] at epoch 0 to eta_floor at epoch n_epochs - 1: log-linearly
  /// (geometric), linearly, or as start / (1 + c n) (harmonic).
  double learning_rate(std::size_t j, std::size_t epoch) const;
  void validate(std::size_t learnable) const;
};

/// One epoch's realised trajectory. dw is empty for observed-data epochs.
struct EpochPath {
  std::vector<double> dw;      ///< K Brownian increments
  RegimePath regimes;          ///< K+1 regimes
  std::vector<double> wealth;  ///< K+1 wealth values, wealth[0] = x0

  std::size_t steps() const { return wealth.empty() ? 0 : wealth.size() - 1; }
};

struct MIncrementSeries {
  std::vector<double> increments;  ///< M_{k+1} - M_k, length K

  double total() const;
};

/// Coefficients at theta and at theta with entry j moved by +-eps_j.
struct PerturbedCoefficients {
  ValueCoefficients base;
  std::vector<ValueCoefficients> plus;
  std::vector<ValueCoefficients> minus;
  std::vector<double> eps;
};

/// 1 + 2 * 2l ODE solves. With threads > 1 the perturbed solves run concurrently;
/// results are stored by index so the output does not depend on scheduling.
PerturbedCoefficients solve_perturbed(const MarketParams& theta, const GeneratorMatrix& q,
                                      const TimeGrid& grid, double xi,
                                      const std::vector<double>& eps, unsigned threads = 1);

/// increment_k = V(t_{k+1}, X_{k+1}, a_{k+1}) - V(t_k, X_k, a_k)
///               - (xi/2) log(pi e xi / (sigma_{a_k}^2 P(t_k, a_k))) dt
MIncrementSeries m_increments(const EpochPath& path, const ValueCoefficients& coeffs,
                              const MarketParams& theta, const InvestmentTarget& target);

/// (1/2) sum_k (increment_k / dt)^2 dt.
double td_loss(const EpochPath& path, const ValueCoefficients& coeffs, const MarketParams& theta,
               const InvestmentTarget& target);

/// dV/dtheta_j at (t_k, x, i) by central difference over the perturbed solves.
double value_derivative(const PerturbedCoefficients& pc, std::size_t j, std::size_t k, double x,
                        std::size_t i, const InvestmentTarget& target);

/// sum_k dV(t_k, X_k, a_k)/dtheta_j * increment_k.
double oc_loss(std::size_t j, const EpochPath& path, const PerturbedCoefficients& pc,
               const MarketParams& theta, const InvestmentTarget& target);

/// sum_k zeta(k, X_k, a_k) * increment_k for an arbitrary adapted test function.
double orthogonality_sum(const MIncrementSeries& inc, const EpochPath& path,
                         const std::function<double(std::size_t, double, std::size_t)>& zeta);

/// (td_loss(theta_j+) - td_loss(theta_j-)) / (2 eps_j).
double td_gradient(std::size_t j, const EpochPath& path, const PerturbedCoefficients& pc,
                   const MarketParams& theta, const InvestmentTarget& target);

/// (f(x + eps) - f(x - eps)) / (2 eps).
double central_difference(const std::function<double(double)>& f, double x, double eps);

/// TD: theta_j -= eta_j(epoch) * signal_j. OC: theta_j += eta_j(epoch) * signal_j.
/// The result is clamped into the parameter bounds.
MarketParams apply_update(const MarketParams& theta, LossKind kind,
                          const std::vector<double>& signals, const LearnSettings& settings,
                          std::size_t epoch);

/// Ito drift of dM^theta at (t, x, i) when wealth evolves under theta_true while
/// the policy and value function use theta. `state` holds the theta coefficients
/// and their time derivatives at t. Zero when theta = theta_true.
double m_drift(const MarketParams& theta, const MarketParams& theta_true,
               const CoefficientState& state, const GeneratorMatrix& q, double x, std::size_t i,
               const InvestmentTarget& target);

}  // namespace emvrs
