#include "emvrs/losses.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <future>
#include <numbers>
#include <string>

#include "emvrs/error.hpp"

namespace emvrs {

std::string_view loss_kind_name(LossKind kind) { return kind == LossKind::kTD ? "td" : "oc"; }

LossKind parse_loss_kind(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "td") return LossKind::kTD;
  if (lower == "oc") return LossKind::kOC;
  throw ConfigError("loss must be 'td' or 'oc', got '" + std::string(text) + "'");
}

double LearnSettings::learning_rate(std::size_t j, std::size_t epoch) const {
  const double start = eta.at(j);
  if (n_epochs <= 1) return start;
  const double frac = std::min(1.0, static_cast<double>(epoch) / static_cast<double>(n_epochs - 1));
  switch (schedule) {
    case RateSchedule::kLinear:
      return start + (eta_floor - start) * frac;
    case RateSchedule::kHarmonic:
      return start / (1.0 + (start / eta_floor - 1.0) * frac);
    case RateSchedule::kGeometric:
      break;
  }
  return start * std::pow(eta_floor / start, std::pow(frac, decay_power));
}

void LearnSettings::validate(std::size_t learnable) const {
  if (eta.size() != learnable) {
    throw ConfigError("learning rates: expected " + std::to_string(learnable) + " entries, got " +
                      std::to_string(eta.size()));
  }
  if (eps.size() != learnable) {
    throw ConfigError("finite-difference steps: expected " + std::to_string(learnable) +
                      " entries, got " + std::to_string(eps.size()));
  }
  for (double e : eta)
    if (!(e > 0.0)) throw ConfigError("learning rates must be > 0");
  for (double e : eps)
    if (!(e > 0.0)) throw ConfigError("finite-difference steps must be > 0");
  if (!(eta_floor > 0.0)) throw ConfigError("eta_floor must be > 0");
}

double MIncrementSeries::total() const {
  double s = 0.0;
  for (double v : increments) s += v;
  return s;
}

PerturbedCoefficients solve_perturbed(const MarketParams& theta, const GeneratorMatrix& q,
                                      const TimeGrid& grid, double xi,
                                      const std::vector<double>& eps, unsigned threads) {
  const std::size_t n = theta.learnable();
  if (eps.size() != n) throw ArgumentError("solve_perturbed: one eps per learnable parameter");
  PerturbedCoefficients pc{solve_phcd(theta, q, grid, xi), std::vector<ValueCoefficients>(n),
                           std::vector<ValueCoefficients>(n), eps};
  auto solve_one = [&](std::size_t task) {
    const std::size_t j = task / 2;
    const double delta = (task % 2 == 0) ? eps[j] : -eps[j];
    auto& slot = (task % 2 == 0) ? pc.plus[j] : pc.minus[j];
    slot = solve_phcd(theta.shifted(j, delta), q, grid, xi);
  };
  const std::size_t tasks = 2 * n;
  if (threads <= 1) {
    for (std::size_t t = 0; t < tasks; ++t) solve_one(t);
    return pc;
  }
  std::vector<std::future<void>> pending;
  for (std::size_t t = 0; t < tasks; ++t) {
    pending.push_back(std::async(std::launch::async, solve_one, t));
    if (pending.size() >= threads) {
      for (auto& f : pending) f.get();
      pending.clear();
    }
  }
  for (auto& f : pending) f.get();
  return pc;
}

namespace {

double entropy_rate(const ValueCoefficients& coeffs, const MarketParams& theta, std::size_t k,
                    std::size_t i, double xi) {
  const double sigma = theta.sigma[i];
  const double p = coeffs.p(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
  return 0.5 * xi * std::log(std::numbers::pi * std::numbers::e * xi / (sigma * sigma * p));
}

void check_path(const EpochPath& path, const ValueCoefficients& coeffs) {
  if (path.wealth.size() != coeffs.grid.points() || path.regimes.alphas.size() != path.wealth.size()) {
    throw ArgumentError("path and coefficients must share the same time grid");
  }
}

}  // namespace

MIncrementSeries m_increments(const EpochPath& path, const ValueCoefficients& coeffs,
                              const MarketParams& theta, const InvestmentTarget& target) {
  check_path(path, coeffs);
  const std::size_t steps = path.steps();
  const double dt = coeffs.grid.dt;
  MIncrementSeries out;
  out.increments.resize(steps);
  const auto& a = path.regimes.alphas;
  double v_now = value_function(coeffs, 0, path.wealth[0], a[0], target);
  for (std::size_t k = 0; k < steps; ++k) {
    const double v_next = value_function(coeffs, k + 1, path.wealth[k + 1], a[k + 1], target);
    out.increments[k] = v_next - v_now - entropy_rate(coeffs, theta, k, a[k], target.xi) * dt;
    v_now = v_next;
  }
  return out;
}

double td_loss(const EpochPath& path, const ValueCoefficients& coeffs, const MarketParams& theta,
               const InvestmentTarget& target) {
  const MIncrementSeries inc = m_increments(path, coeffs, theta, target);
  const double dt = coeffs.grid.dt;
  double acc = 0.0;
  for (double v : inc.increments) {
    const double td = v / dt;
    acc += td * td * dt;
  }
  return 0.5 * acc;
}

double value_derivative(const PerturbedCoefficients& pc, std::size_t j, std::size_t k, double x,
                        std::size_t i, const InvestmentTarget& target) {
  const double up = value_function(pc.plus.at(j), k, x, i, target);
  const double down = value_function(pc.minus.at(j), k, x, i, target);
  return (up - down) / (2.0 * pc.eps.at(j));
}

double orthogonality_sum(const MIncrementSeries& inc, const EpochPath& path,
                         const std::function<double(std::size_t, double, std::size_t)>& zeta) {
  double acc = 0.0;
  for (std::size_t k = 0; k < inc.increments.size(); ++k) {
    acc += zeta(k, path.wealth[k], path.regimes.alphas[k]) * inc.increments[k];
  }
  return acc;
}

double oc_loss(std::size_t j, const EpochPath& path, const PerturbedCoefficients& pc,
               const MarketParams& theta, const InvestmentTarget& target) {
  const MIncrementSeries inc = m_increments(path, pc.base, theta, target);
  return orthogonality_sum(inc, path, [&](std::size_t k, double x, std::size_t i) {
    return value_derivative(pc, j, k, x, i, target);
  });
}

double td_gradient(std::size_t j, const EpochPath& path, const PerturbedCoefficients& pc,
                   const MarketParams& theta, const InvestmentTarget& target) {
  const double eps = pc.eps.at(j);
  const double up = td_loss(path, pc.plus.at(j), theta.shifted(j, eps), target);
  const double down = td_loss(path, pc.minus.at(j), theta.shifted(j, -eps), target);
  return (up - down) / (2.0 * eps);
}

double central_difference(const std::function<double(double)>& f, double x, double eps) {
  return (f(x + eps) - f(x - eps)) / (2.0 * eps);
}

MarketParams apply_update(const MarketParams& theta, LossKind kind,
                          const std::vector<double>& signals, const LearnSettings& settings,
                          std::size_t epoch) {
  if (signals.size() != theta.learnable()) {
    throw ArgumentError("apply_update: expected " + std::to_string(theta.learnable()) + " signals");
  }
  MarketParams next = theta;
  const double sign = kind == LossKind::kTD ? -1.0 : 1.0;
  for (std::size_t j = 0; j < signals.size(); ++j) {
    next.theta(j) += sign * settings.learning_rate(j, epoch) * signals[j];
  }
  return next.clamped();
}

double m_drift(const MarketParams& theta, const MarketParams& theta_true,
               const CoefficientState& state, const GeneratorMatrix& q, double x, std::size_t i,
               const InvestmentTarget& target) {
  const auto l = static_cast<Eigen::Index>(q.size());
  const auto ii = static_cast<Eigen::Index>(i);
  const Matrix& qm = q.matrix();
  const double sigma = theta.sigma[i];
  const double rho = theta.rho[i];
  const double sigma_true = theta_true.sigma[i];
  const double rho_true = theta_true.rho[i];
  const double r = theta.r[i];
  const double xi = target.xi;
  const double gap = target.lambda - target.z;
  const double p = state.p(ii);
  const double h = state.h(ii);
  const double y = x + gap * h;

  double jump_p = 0.0, jump_h = 0.0, jump_c = 0.0, jump_d = 0.0;
  for (Eigen::Index j = 0; j < l; ++j) {
    const double q_ij = qm(ii, j);
    const double dh = state.h(j) - h;
    jump_p += q_ij * state.p(j);
    jump_h += q_ij * state.p(j) * dh;
    jump_c += q_ij * (state.p(j) * dh * dh + state.c(j));
    jump_d += q_ij * state.d(j);
  }
  const double ratio = rho / sigma;
  const double quad = state.dp(ii) + p * sigma_true * sigma_true * ratio * ratio -
                      2.0 * p * rho_true * sigma_true * ratio + 2.0 * p * r + jump_p;
  const double linear = state.dh(ii) - r * h + jump_h / p;
  const double cross = state.dc(ii) + jump_c;
  // The exploration variance xi / (2 sigma^2 P) is realised under sigma_true,
  // which contributes (xi/2) sigma_true^2 / sigma^2 against the entropy rate.
  const double level = state.dd(ii) + jump_d + 0.5 * xi * sigma_true * sigma_true / (sigma * sigma) -
                       0.5 * xi * std::log(std::numbers::pi * std::numbers::e * xi / (sigma * sigma * p));
  return quad * y * y + linear * 2.0 * gap * p * y + cross * gap * gap + level;
}

}  // namespace emvrs
