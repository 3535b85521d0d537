#include "emvrs/backtest.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "emvrs/error.hpp"
#include "emvrs/io.hpp"
#include "emvrs/policy.hpp"
#include "emvrs/random.hpp"
#include "emvrs/value_odes.hpp"
#include "json.hpp"

namespace emvrs {

std::string_view model_kind_name(ModelKind kind) { return kind == ModelKind::kEMV ? "EMV" : "EMVRS"; }

ModelKind parse_model_kind(std::string_view text) {
  if (text == "EMVRS" || text == "emvrs") return ModelKind::kEMVRS;
  if (text == "EMV" || text == "emv") return ModelKind::kEMV;
  throw ConfigError("model must be EMVRS or EMV, got '" + std::string(text) + "'");
}

void BacktestSetting::validate() const {
  if (!(action_constraint >= 0.0)) throw ConfigError("action constraint must be >= 0");
}

AnnualStats annualize(const std::vector<double>& terminal_values, double horizon) {
  if (!(horizon > 0.0)) throw ArgumentError("annualize: horizon must be > 0");
  AnnualStats out;
  std::vector<double> annual;
  annual.reserve(terminal_values.size());
  for (double x : terminal_values) {
    if (!(x > 0.0)) {
      ++out.excluded;
      continue;
    }
    annual.push_back(std::pow(x, 1.0 / horizon) - 1.0);
  }
  if (annual.empty()) throw ArgumentError("annualize: no positive terminal values");
  double sum = 0.0;
  for (double a : annual) sum += a;
  out.mean = sum / static_cast<double>(annual.size());
  double sq = 0.0;
  for (double a : annual) sq += (a - out.mean) * (a - out.mean);
  out.vol = std::sqrt(sq / static_cast<double>(annual.size()));
  return out;
}

double sharpe(double mean_annual, double vol_annual, double rf_annual) {
  if (!(vol_annual > 0.0)) throw ArgumentError("Sharpe ratio undefined for zero volatility");
  return (mean_annual - rf_annual) / vol_annual;
}

double risk_free_annual(const std::vector<RealWindow>& windows, double dt) {
  if (windows.empty()) throw ArgumentError("risk-free benchmark needs at least one window");
  double total = 0.0;
  for (const RealWindow& w : windows) {
    double x = 1.0;
    for (std::size_t k = 0; k + 1 < w.monthly.size(); ++k) x *= 1.0 + w.monthly.rates[k] * dt;
    total += x;
  }
  const double horizon = dt * static_cast<double>(windows.front().monthly.size() - 1);
  return std::pow(total / static_cast<double>(windows.size()), 1.0 / horizon) - 1.0;
}

BacktestReport run_backtest(const std::vector<RealWindow>& windows,
                            const std::vector<TrainedModel>& models, const BacktestSetting& setting,
                            const RealTrainConfig& base, std::size_t repeats, std::uint64_t seed,
                            double rf_annual) {
  setting.validate();
  if (models.size() != windows.size()) {
    throw ConfigError("backtest needs one trained model per window: " + std::to_string(windows.size()) +
                      " windows, " + std::to_string(models.size()) + " models");
  }
  if (repeats < 1) throw ConfigError("backtest repeats must be >= 1");
  const ActionConstraint constraint{setting.action_constraint, setting.short_selling};
  BacktestReport report;
  report.setting = setting;
  report.rf_annual = rf_annual;
  report.terminal_values.resize(windows.size());
  std::vector<double> all;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const TrainedModel& model = models[w];
    MarketSeries monthly = windows[w].monthly;
    if (model.q.size() == 1) monthly.labels.assign(monthly.size(), 0);
    const ValueCoefficients coeffs = solve_phcd(model.theta, model.q, base.grid, base.xi);
    InvestmentTarget target{base.x0, base.z, base.xi, 0.0};
    target.lambda = optimal_lambda(coeffs, base.x0, monthly.labels.front(), base.z);
    for (std::size_t r = 0; r < repeats; ++r) {
      Rng rng = make_rng(seed, Stream::kBacktest, w, r);
      const RealPath path = wealth_path_real(monthly, model.theta, coeffs, target, constraint, rng);
      report.terminal_values[w].push_back(path.path.wealth.back());
      all.push_back(path.path.wealth.back());
    }
  }
  report.n_trajectories = all.size();
  const AnnualStats stats = annualize(all, base.grid.horizon);
  report.mean_annual_return = stats.mean;
  report.vol_annual_return = stats.vol;
  report.excluded = stats.excluded;
  if (stats.mean == rf_annual) {
    report.sharpe = 0.0;
  } else if (stats.vol > 0.0) {
    report.sharpe = sharpe(stats.mean, stats.vol, rf_annual);
  } else {
    report.sharpe = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

void write_report_csv(std::ostream& os, const std::vector<BacktestReport>& reports) {
  os << "training,AC,SS,model,mean,volatility,SR\n";
  for (const BacktestReport& r : reports) {
    os << loss_kind_name(r.setting.learning) << ',' << format_double(r.setting.action_constraint) << ','
       << (r.setting.short_selling ? "yes" : "no") << ',' << model_kind_name(r.setting.model) << ','
       << format_double(r.mean_annual_return) << ',' << format_double(r.vol_annual_return) << ','
       << format_double(r.sharpe) << '\n';
  }
}

std::string report_json(const std::vector<BacktestReport>& reports) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const BacktestReport& r : reports) {
    nlohmann::ordered_json row;
    row["training"] = loss_kind_name(r.setting.learning);
    row["action_constraint"] = r.setting.action_constraint;
    row["short_selling"] = r.setting.short_selling;
    row["model"] = model_kind_name(r.setting.model);
    row["mean_annual_return"] = r.mean_annual_return;
    row["vol_annual_return"] = r.vol_annual_return;
    row["rf_annual"] = r.rf_annual;
    if (std::isfinite(r.sharpe)) row["sharpe"] = r.sharpe;
    else row["sharpe"] = nullptr;
    row["n_trajectories"] = r.n_trajectories;
    row["excluded"] = r.excluded;
    row["terminal_values"] = r.terminal_values;
    rows.push_back(std::move(row));
  }
  nlohmann::ordered_json doc;
  doc["reports"] = std::move(rows);
  return doc.dump(2) + "\n";
}

}  // namespace emvrs
