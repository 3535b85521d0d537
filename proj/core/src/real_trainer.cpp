#include "emvrs/real_trainer.hpp"

#include <cmath>
#include <string>
#include <unsupported/Eigen/MatrixFunctions>

#include "emvrs/error.hpp"

namespace emvrs {

void RealTrainConfig::validate() const {
  grid.validate();
  if (theta0.sigma.size() != theta0.rho.size() || theta0.sigma.empty()) {
    throw ConfigError("theta0 needs matching, non-empty sigma and rho lists");
  }
  for (double s : theta0.sigma)
    if (!(s > 0.0)) throw ConfigError("theta0 volatilities must be > 0");
  if (!(xi > 0.0)) throw ConfigError("xi must be > 0");
  if (!(x0 > 0.0)) throw ConfigError("x0 must be > 0");
  if (!(z > 0.0)) throw ConfigError("z must be > 0");
  if (!(constraint.multiple >= 0.0)) throw ConfigError("action constraint must be >= 0");
  settings.validate(theta0.learnable());
}

RealTrainConfig table3_config(LossKind loss, std::size_t regimes) {
  if (regimes < 1) throw ArgumentError("at least one regime is required");
  RealTrainConfig c;
  c.grid = TimeGrid::make(10.0, 1.0 / 12.0, 10);
  c.xi = 0.5;
  c.x0 = 1.0;
  c.z = 1.4;
  c.constraint = ActionConstraint{3.0, true};
  c.theta0.sigma.assign(regimes, 0.2);
  c.theta0.rho.assign(regimes, 1.0);
  c.loss = loss;
  c.settings.eta.assign(2 * regimes, 1e3);
  c.settings.eps.assign(2 * regimes, 1e-3);
  return c;
}

GeneratorEstimate estimate_generator(const std::vector<std::size_t>& labels, std::size_t n_states,
                                     double dt) {
  if (n_states < 1) throw ArgumentError("generator estimate needs at least one state");
  if (!(dt > 0.0)) throw ArgumentError("generator estimate needs dt > 0");
  const auto l = static_cast<Eigen::Index>(n_states);
  GeneratorEstimate est;
  est.counts = Matrix::Zero(l, l);
  for (std::size_t k = 0; k + 1 < labels.size(); ++k) {
    if (labels[k] >= n_states || labels[k + 1] >= n_states) {
      throw ArgumentError("label " + std::to_string(std::max(labels[k], labels[k + 1]) + 1) +
                          " exceeds the regime count");
    }
    est.counts(static_cast<Eigen::Index>(labels[k]), static_cast<Eigen::Index>(labels[k + 1])) += 1.0;
  }
  est.transition = Matrix::Identity(l, l);
  for (Eigen::Index i = 0; i < l; ++i) {
    const double total = est.counts.row(i).sum();
    if (total > 0.0) est.transition.row(i) = est.counts.row(i) / total;
  }
  if (n_states == 1) {
    est.q = GeneratorMatrix::single();
    est.used_log = true;
    return est;
  }

  Matrix raw = (est.transition - Matrix::Identity(l, l)) / dt;
  bool log_ok = std::abs(est.transition.determinant()) > 1e-12;
  if (log_ok) {
    const Matrix logp = est.transition.log();
    // Negative eigenvalues have no real logarithm; Eigen then returns a matrix
    // that does not exponentiate back to P.
    log_ok = logp.allFinite() && (logp.exp() - est.transition).cwiseAbs().maxCoeff() < 1e-8;
    if (log_ok) raw = logp / dt;
  }
  est.used_log = log_ok;
  Matrix q = raw;
  for (Eigen::Index i = 0; i < l; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < l; ++j) {
      if (i == j) continue;
      if (q(i, j) < 0.0) q(i, j) = 0.0;
      off += q(i, j);
    }
    q(i, i) = -off;
  }
  est.q = GeneratorMatrix(q);
  return est;
}

std::vector<double> regime_rates(const std::vector<double>& rates,
                                 const std::vector<std::size_t>& labels, std::size_t n_states) {
  if (rates.size() != labels.size()) throw ArgumentError("rates and labels differ in length");
  if (rates.empty()) throw ArgumentError("regime rates need observations");
  std::vector<double> sum(n_states, 0.0), cnt(n_states, 0.0);
  double all = 0.0;
  for (std::size_t k = 0; k < rates.size(); ++k) {
    if (labels[k] >= n_states) throw ArgumentError("label exceeds the regime count");
    sum[labels[k]] += rates[k];
    cnt[labels[k]] += 1.0;
    all += rates[k];
  }
  const double overall = all / static_cast<double>(rates.size());
  std::vector<double> out(n_states);
  for (std::size_t i = 0; i < n_states; ++i) out[i] = cnt[i] > 0.0 ? sum[i] / cnt[i] : overall;
  return out;
}

RealWindow prepare_window(const SeriesWindow& window, std::size_t n_states, std::size_t months,
                          std::uint64_t seed) {
  const MarketSeries& daily = window.data;
  RealWindow out{window.nominal_start, window.nominal_end, {}, {}};
  std::vector<std::size_t> daily_labels(daily.size(), 0);
  if (n_states > 1) {
    const std::vector<double> returns = log_returns(daily.prices);
    out.hmm = fit_hmm(returns, n_states, 1e-8, 500, seed).model;
    daily_labels = labels_for_prices(viterbi(out.hmm, returns));
  }
  const std::vector<std::size_t> rows = monthly_sample_rows(daily, months);
  MarketSeries& m = out.monthly;
  for (std::size_t r : rows) {
    m.dates.push_back(daily.dates[r]);
    m.prices.push_back(daily.prices[r]);
    m.rates.push_back(daily.rates[r]);
    m.labels.push_back(daily_labels[r]);
  }
  m.prices = normalize_prices(m.prices);
  return out;
}

RealPath wealth_path_real(const MarketSeries& monthly, const MarketParams& theta,
                          const ValueCoefficients& coeffs, const InvestmentTarget& target,
                          const ActionConstraint& constraint, Rng& rng) {
  const std::size_t steps = coeffs.grid.steps;
  if (monthly.size() != steps + 1 || monthly.labels.size() != steps + 1) {
    throw ArgumentError("observed window needs K+1 labelled rows, got " + std::to_string(monthly.size()));
  }
  const double dt = coeffs.grid.dt;
  RealPath out;
  out.path.regimes.alphas = monthly.labels;
  out.path.regimes.dt = dt;
  out.path.wealth.resize(steps + 1);
  out.actions.resize(steps);
  out.path.wealth[0] = target.x0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double x = out.path.wealth[k];
    const GaussianPolicy pol = policy_distribution(coeffs, theta, k, x, monthly.labels[k], target);
    const double u = sample_action(pol, constraint, target.x0, rng);
    out.actions[k] = u;
    const double next = u * (monthly.prices[k + 1] / monthly.prices[k]) +
                        (x - u) * (1.0 + monthly.rates[k] * dt);
    if (!std::isfinite(next)) {
      throw NumericalError("wealth became non-finite at step " + std::to_string(k + 1));
    }
    out.path.wealth[k + 1] = next;
  }
  return out;
}

RealTrainResult train_real(const MarketSeries& monthly, const RealTrainConfig& config,
                           std::size_t window_index) {
  config.validate();
  const std::size_t l = config.regimes();
  if (monthly.labels.size() != monthly.size()) throw ArgumentError("training window must be labelled");
  RealTrainResult result;
  result.q = estimate_generator(monthly.labels, l, config.grid.dt).q;
  result.rates = regime_rates(monthly.rates, monthly.labels, l);

  MarketParams theta = config.theta0;
  theta.r = result.rates;
  theta = theta.clamped();
  ParameterHistory& history = result.history;
  history.theta.reserve(config.settings.n_epochs + 1);
  history.epochs.reserve(config.settings.n_epochs);
  history.theta.push_back(theta);
  const std::size_t n = theta.learnable();

  for (std::size_t epoch = 0; epoch < config.settings.n_epochs; ++epoch) {
    try {
      const MarketParams& current = history.theta.back();
      const PerturbedCoefficients pc = solve_perturbed(current, result.q, config.grid, config.xi,
                                                       config.settings.eps, config.threads);
      const std::size_t alpha0 = monthly.labels.front();
      InvestmentTarget target{config.x0, config.z, config.xi, 0.0};
      target.lambda = optimal_lambda(pc.base, config.x0, alpha0, config.z);
      Rng rng = make_rng(config.seed, Stream::kAction, epoch, window_index);
      const RealPath rp =
          wealth_path_real(monthly, current, pc.base, target, config.constraint, rng);

      EpochRecord rec;
      rec.epoch = epoch;
      rec.initial_regime = alpha0;
      rec.lambda = target.lambda;
      rec.td_loss = td_loss(rp.path, pc.base, current, target);
      rec.m_total = m_increments(rp.path, pc.base, current, target).total();
      rec.signals.resize(n);
      for (std::size_t j = 0; j < n; ++j) {
        rec.signals[j] = config.loss == LossKind::kTD ? td_gradient(j, rp.path, pc, current, target)
                                                      : oc_loss(j, rp.path, pc, current, target);
      }
      history.theta.push_back(apply_update(current, config.loss, rec.signals, config.settings, epoch));
      history.epochs.push_back(std::move(rec));
    } catch (const NumericalError& e) {
      throw NumericalError("window " + std::to_string(window_index + 1) + ", epoch " +
                           std::to_string(epoch) + ": " + e.what());
    }
  }
  return result;
}

std::vector<RealTrainResult> train_windows(const std::vector<RealWindow>& windows,
                                           const RealTrainConfig& config) {
  std::vector<RealTrainResult> out;
  out.reserve(windows.size());
  RealTrainConfig cfg = config;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    out.push_back(train_real(windows[w].monthly, cfg, w));
    const MarketParams& last = out.back().history.final_theta();
    cfg.theta0.sigma = last.sigma;
    cfg.theta0.rho = last.rho;
  }
  return out;
}

}  // namespace emvrs
