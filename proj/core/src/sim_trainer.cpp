#include "emvrs/sim_trainer.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "emvrs/error.hpp"
#include "emvrs/io.hpp"

namespace emvrs {

void SimConfig::validate() const {
  grid.validate();
  theta_true.validate();
  theta0.validate();
  const std::size_t l = q.size();
  if (theta_true.regimes() != l || theta0.regimes() != l) {
    throw ConfigError("theta_true, theta0 and Q must agree on the number of regimes");
  }
  if (theta0.r != theta_true.r) throw ConfigError("theta0 and theta_true must share the rates r");
  if (!theta_true.within_bounds()) throw ConfigError("theta_true lies outside the clamp bounds");
  if (!(xi > 0.0)) throw ConfigError("xi must be > 0");
  if (!(x0 > 0.0)) throw ConfigError("x0 must be > 0");
  if (!(z > 0.0)) throw ConfigError("z must be > 0");
  settings.validate(theta0.learnable());
}

namespace {

MarketParams two_regime(double s1, double s2, double r1, double r2, double r_1, double r_2) {
  MarketParams p;
  p.sigma = {s1, s2};
  p.rho = {r1, r2};
  p.r = {r_1, r_2};
  return p;
}

}  // namespace

SimConfig table1_config(LossKind loss) {
  SimConfig c;
  c.grid = TimeGrid::make(1.0, 0.1, 10);
  c.q = GeneratorMatrix::from_rows({{-1.0, 1.0}, {1.0, -1.0}});
  c.xi = 0.5;
  c.x0 = 1.0;
  c.z = 1.4;
  c.theta_true = two_regime(0.2, 0.2, 1.0, -0.5, 0.0, 0.0);
  c.theta0 = two_regime(0.1, 0.1, 0.8, -0.3, 0.0, 0.0);
  c.loss = loss;
  c.settings.eta = loss == LossKind::kTD ? std::vector<double>{1e4, 1e4, 2e4, 2e4}
                                         : std::vector<double>{1e4, 1e4, 1e3, 1e3};
  c.settings.eps = std::vector<double>(4, 1e-3);
  return c;
}

SimConfig table2_config() {
  SimConfig c = table1_config(LossKind::kOC);
  c.theta_true = two_regime(0.2, 0.3, 0.95, -0.25 / 0.3, 0.01, 0.05);
  c.theta0 = two_regime(0.1, 0.1, 0.5, -0.5, 0.01, 0.05);
  c.settings.eta = {1e4, 1e4, 1e4, 1e4};
  return c;
}

ExploratoryCoefficients exploratory_coefficients(const GaussianPolicy& pol, double sigma, double rho,
                                                 double r, double x) {
  return {r * x + rho * sigma * pol.mean,
          sigma * std::sqrt(pol.mean * pol.mean + pol.variance)};
}

std::vector<double> simulate_wealth_path(const MarketParams& theta, const MarketParams& theta_true,
                                         const ValueCoefficients& coeffs,
                                         const RegimePath& regimes, const std::vector<double>& dw,
                                         const InvestmentTarget& target) {
  const std::size_t steps = coeffs.grid.steps;
  if (dw.size() != steps || regimes.alphas.size() != steps + 1) {
    throw ArgumentError("simulate_wealth_path: dW needs K entries and the regime path K+1");
  }
  const double dt = coeffs.grid.dt;
  std::vector<double> x(steps + 1);
  x[0] = target.x0;
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t i = regimes.alphas[k];
    const GaussianPolicy pol = policy_distribution(coeffs, theta, k, x[k], i, target);
    const ExploratoryCoefficients ec =
        exploratory_coefficients(pol, theta_true.sigma[i], theta_true.rho[i], theta.r[i], x[k]);
    x[k + 1] = x[k] + ec.drift * dt + ec.diffusion * dw[k];
    if (!std::isfinite(x[k + 1])) {
      throw NumericalError("wealth became non-finite at step " + std::to_string(k + 1));
    }
  }
  return x;
}

EpochNoise epoch_noise(const SimConfig& config, std::size_t epoch) {
  const std::size_t steps = config.grid.steps;
  EpochNoise noise;
  Rng bm = make_rng(config.seed, Stream::kBrownian, epoch);
  const double sd = std::sqrt(config.grid.dt);
  noise.dw.resize(steps);
  for (double& w : noise.dw) w = sd * standard_normal(bm);

  Rng rg = make_rng(config.seed, Stream::kRegime, epoch);
  const std::size_t l = config.q.size();
  const auto alpha0 = std::min(l - 1, static_cast<std::size_t>(uniform01(rg) * static_cast<double>(l)));
  noise.regimes = sample_regime_path(config.q, config.grid.dt, steps, alpha0, rg);
  noise.regimes.seed = derive_seed(config.seed, Stream::kRegime, epoch);
  return noise;
}

EpochOutcome run_sim_epoch(const SimConfig& config, const MarketParams& theta, std::size_t epoch,
                           std::optional<double> previous_lambda) {
  EpochNoise noise = epoch_noise(config, epoch);
  const PerturbedCoefficients pc =
      solve_perturbed(theta, config.q, config.grid, config.xi, config.settings.eps, config.threads);
  const std::size_t alpha0 = noise.regimes.alphas.front();

  InvestmentTarget target{config.x0, config.z, config.xi, 0.0};
  target.lambda = optimal_lambda(pc.base, config.x0, alpha0, config.z);

  InvestmentTarget sim_target = target;
  if (config.lambda_timing == LambdaTiming::kPostSim && previous_lambda) {
    sim_target.lambda = *previous_lambda;
  }

  EpochOutcome out;
  out.path.dw = std::move(noise.dw);
  out.path.regimes = std::move(noise.regimes);
  out.path.wealth = simulate_wealth_path(theta, config.theta_true, pc.base, out.path.regimes,
                                         out.path.dw, sim_target);

  const std::size_t n = theta.learnable();
  EpochRecord& rec = out.record;
  rec.epoch = epoch;
  rec.initial_regime = alpha0;
  rec.lambda = target.lambda;
  rec.td_loss = td_loss(out.path, pc.base, theta, target);
  rec.m_total = m_increments(out.path, pc.base, theta, target).total();
  rec.signals.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    rec.signals[j] = config.loss == LossKind::kTD ? td_gradient(j, out.path, pc, theta, target)
                                                  : oc_loss(j, out.path, pc, theta, target);
  }
  out.next_theta = apply_update(theta, config.loss, rec.signals, config.settings, epoch);
  return out;
}

ParameterHistory train(const SimConfig& config) {
  config.validate();
  ParameterHistory history;
  history.theta.reserve(config.settings.n_epochs + 1);
  history.epochs.reserve(config.settings.n_epochs);
  history.theta.push_back(config.theta0);
  std::optional<double> previous_lambda;
  for (std::size_t n = 0; n < config.settings.n_epochs; ++n) {
    try {
      EpochOutcome out = run_sim_epoch(config, history.theta.back(), n, previous_lambda);
      previous_lambda = out.record.lambda;
      history.theta.push_back(std::move(out.next_theta));
      history.epochs.push_back(std::move(out.record));
    } catch (const NumericalError& e) {
      throw NumericalError("epoch " + std::to_string(n) + ": " + e.what());
    }
  }
  return history;
}

void write_training_log(std::ostream& os, const ParameterHistory& history) {
  const std::size_t l = history.theta.front().regimes();
  os << "epoch";
  for (std::size_t i = 0; i < l; ++i) os << ",sigma_" << (i + 1);
  for (std::size_t i = 0; i < l; ++i) os << ",rho_" << (i + 1);
  os << ",lambda,td_loss,m_total";
  for (std::size_t j = 0; j < 2 * l; ++j) os << ",signal_" << (j + 1);
  os << '\n';
  for (std::size_t row = 0; row < history.theta.size(); ++row) {
    os << row;
    for (double v : history.theta[row].theta_vector()) os << ',' << format_double(v);
    if (row == 0) {
      for (std::size_t j = 0; j < 3 + 2 * l; ++j) os << ",";
    } else {
      const EpochRecord& rec = history.epochs[row - 1];
      os << ',' << format_double(rec.lambda) << ',' << format_double(rec.td_loss) << ','
         << format_double(rec.m_total);
      for (double s : rec.signals) os << ',' << format_double(s);
    }
    os << '\n';
  }
}

}  // namespace emvrs
