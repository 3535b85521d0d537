#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "emvrs/backtest.hpp"
#include "emvrs/error.hpp"
#include "json.hpp"
#include "published_table.hpp"

using namespace emvrs;
using namespace std::chrono;

namespace {

RealWindow window_with(double rate, std::uint64_t seed, std::size_t rows = 121) {
  RealWindow w;
  Rng rng = make_rng(seed, Stream::kHmmSynthetic);
  sys_days d = sys_days(Date{year{2006}, month{1}, day{3}});
  double price = 1.0;
  for (std::size_t k = 0; k < rows; ++k) {
    w.monthly.dates.push_back(Date(d + days(30 * static_cast<int>(k))));
    w.monthly.prices.push_back(price);
    w.monthly.rates.push_back(rate);
    w.monthly.labels.push_back((k / 7) % 2);
    price *= std::exp(0.005 + 0.04 * standard_normal(rng));
  }
  w.start = w.monthly.dates.front();
  w.end = w.monthly.dates.back();
  return w;
}

TrainedModel two_regime_model(double rate) {
  TrainedModel m;
  m.theta.sigma = {0.2, 0.3};
  m.theta.rho = {0.8, -0.4};
  m.theta.r = {rate, rate};
  m.q = GeneratorMatrix::from_rows({{-1.0, 1.0}, {2.0, -2.0}});
  return m;
}

TrainedModel single_model(double rate) {
  TrainedModel m;
  m.theta.sigma = {0.25};
  m.theta.rho = {0.5};
  m.theta.r = {rate};
  m.q = GeneratorMatrix::single();
  return m;
}

}  // namespace

TEST_CASE("annualisation anchors") {
  CHECK(std::abs(annualize({1.4}, 10.0).mean - 0.03422) < 1e-6);
  CHECK(std::abs(annualize({1.0747}, 10.0).mean - 0.00723) < 1e-6);
  const AnnualStats same = annualize({1.2, 1.2, 1.2}, 10.0);
  CHECK(same.vol == 0.0);
  const AnnualStats two = annualize({1.0, std::pow(1.1, 10.0)}, 10.0);
  CHECK(two.mean == doctest::Approx(0.05));
  CHECK(two.vol == doctest::Approx(0.05));  // population convention
}

TEST_CASE("non-positive terminal values are excluded") {
  const AnnualStats s = annualize({1.4, -0.2, 0.0, 1.4}, 10.0);
  CHECK(s.excluded == 2);
  CHECK(s.mean == doctest::Approx(std::pow(1.4, 0.1) - 1.0));
  CHECK_THROWS_AS(annualize({-1.0, 0.0}, 10.0), ArgumentError);
  CHECK_THROWS_AS(annualize({1.0}, 0.0), ArgumentError);
}

TEST_CASE("annualisation ignores trajectory order") {
  std::mt19937_64 rng(21);
  std::lognormal_distribution<double> ln(0.3, 0.4);
  std::vector<double> v(100);
  for (double& x : v) x = ln(rng);
  const AnnualStats a = annualize(v, 10.0);
  std::shuffle(v.begin(), v.end(), rng);
  const AnnualStats b = annualize(v, 10.0);
  CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-14));
  CHECK(a.vol == doctest::Approx(b.vol).epsilon(1e-12));
}

TEST_CASE("Sharpe ratio reproduces the published cells") {
  const double rf = test::kPublishedRiskFree;
  CHECK(sharpe(12.177, 1.932, rf) == doctest::Approx(11.454 / 1.932).epsilon(1e-12));
  CHECK(sharpe(3.507, 1.673, rf) == doctest::Approx(1.6641).epsilon(1e-4));
  for (const test::PublishedRow& row : test::kPublishedRows) {
    CHECK(std::abs(sharpe(row.mean_rs, row.vol_rs, rf) - row.sr_rs) <= 0.01);
    CHECK(std::abs(sharpe(row.mean_single, row.vol_single, rf) - row.sr_single) <= 0.01);
  }
  CHECK(sharpe(0.01, 0.2, 0.01) == 0.0);
  CHECK_THROWS_AS(sharpe(0.05, 0.0, 0.01), ArgumentError);
}

TEST_CASE("risk-free benchmark") {
  const double r = 12.0 * (std::pow(1.0747, 1.0 / 120.0) - 1.0);
  const double dt = 1.0 / 12.0;
  CHECK(std::abs(risk_free_annual({window_with(r, 1), window_with(r, 2)}, dt) - 0.00723) < 1e-6);
  // Nominal 0.723% compounded monthly.
  const double flat = risk_free_annual({window_with(0.00723, 1)}, dt);
  CHECK(flat == doctest::Approx(std::pow(1.0 + 0.00723 / 12.0, 12.0) - 1.0).epsilon(1e-12));
  CHECK_THROWS_AS(risk_free_annual({}, dt), ArgumentError);
}

TEST_CASE("all-bond backtest earns the risk-free rate") {
  const double r = 12.0 * (std::pow(1.0747, 1.0 / 120.0) - 1.0);
  const RealTrainConfig base = table3_config();
  const std::vector<RealWindow> windows{window_with(r, 3)};
  const double rf = risk_free_annual(windows, base.grid.dt);
  BacktestSetting s;
  s.action_constraint = 0.0;
  const BacktestReport rep = run_backtest(windows, {two_regime_model(r)}, s, base, 1, 7, rf);
  CHECK(std::abs(rep.mean_annual_return - 0.00723) < 1e-6);
  CHECK(rep.vol_annual_return == 0.0);
  CHECK(rep.sharpe == 0.0);
  CHECK(rep.n_trajectories == 1);
}

TEST_CASE("backtest shape, errors and determinism") {
  const RealTrainConfig base = table3_config();
  const std::vector<RealWindow> windows{window_with(0.01, 4), window_with(0.02, 5), window_with(0.015, 6)};
  const std::vector<TrainedModel> models{two_regime_model(0.01), two_regime_model(0.02), two_regime_model(0.015)};
  const double rf = risk_free_annual(windows, base.grid.dt);
  const BacktestSetting s;
  const BacktestReport a = run_backtest(windows, models, s, base, 5, 11, rf);
  CHECK(a.n_trajectories == 15);
  CHECK(a.terminal_values.size() == 3);
  CHECK(a.terminal_values[2].size() == 5);
  CHECK(a.vol_annual_return > 0.0);
  CHECK(std::isfinite(a.sharpe));
  const BacktestReport b = run_backtest(windows, models, s, base, 5, 11, rf);
  CHECK(a.terminal_values == b.terminal_values);
  CHECK(run_backtest(windows, models, s, base, 5, 12, rf).terminal_values != a.terminal_values);

  const BacktestReport one = run_backtest({windows[0]}, {models[0]}, s, base, 1, 11, rf);
  CHECK(one.n_trajectories == 1);
  CHECK(one.vol_annual_return == 0.0);

  CHECK_THROWS_AS(run_backtest(windows, {models[0]}, s, base, 5, 11, rf), ConfigError);
  CHECK_THROWS_AS(run_backtest(windows, models, s, base, 0, 11, rf), ConfigError);
  BacktestSetting negative;
  negative.action_constraint = -1.0;
  CHECK_THROWS_AS(run_backtest(windows, models, negative, base, 1, 11, rf), ConfigError);
}

TEST_CASE("single-regime baseline ignores labels") {
  const RealTrainConfig base = table3_config(LossKind::kOC, 1);
  RealWindow w = window_with(0.01, 8);
  RealWindow relabelled = w;
  for (std::size_t& l : relabelled.monthly.labels) l = 1 - l;
  BacktestSetting s;
  s.model = ModelKind::kEMV;
  const BacktestReport a = run_backtest({w}, {single_model(0.01)}, s, base, 3, 5, 0.01);
  const BacktestReport b = run_backtest({relabelled}, {single_model(0.01)}, s, base, 3, 5, 0.01);
  CHECK(a.terminal_values == b.terminal_values);
}

TEST_CASE("constraints bound the sampled exposure") {
  const RealTrainConfig base = table3_config();
  const RealWindow w = window_with(0.01, 9);
  const TrainedModel m = two_regime_model(0.01);
  const ValueCoefficients c = solve_phcd(m.theta, m.q, base.grid, base.xi);
  InvestmentTarget t{base.x0, base.z, base.xi, 0.0};
  t.lambda = optimal_lambda(c, base.x0, w.monthly.labels.front(), base.z);
  for (double ac : {1.0, 1.5, 2.0, 3.0}) {
    for (bool ss : {true, false}) {
      Rng rng = make_rng(13, Stream::kBacktest, 0, 0);
      const RealPath p = wealth_path_real(w.monthly, m.theta, c, t, ActionConstraint{ac, ss}, rng);
      for (double u : p.actions) {
        CHECK(std::abs(u) <= ac * base.x0);
        if (!ss) CHECK(u >= 0.0);
      }
    }
  }
  // Same raw draw: a tighter interval never yields a larger exposure.
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 4.0);
  const std::vector<double> acs = {1.0, 1.5, 2.0, 3.0};
  for (int k = 0; k < 1000; ++k) {
    const double u = n(rng);
    for (bool ss : {true, false}) {
      for (std::size_t j = 1; j < acs.size(); ++j) {
        CHECK(std::abs(clip_action(u, ActionConstraint{acs[j - 1], ss}, 1.0)) <=
              std::abs(clip_action(u, ActionConstraint{acs[j], ss}, 1.0)));
      }
    }
  }
  // First step under two constraints sees the same raw draw.
  Rng r1 = make_rng(13, Stream::kBacktest, 0, 0), r2 = make_rng(13, Stream::kBacktest, 0, 0);
  const RealPath tight = wealth_path_real(w.monthly, m.theta, c, t, ActionConstraint{1.0, true}, r1);
  const RealPath loose = wealth_path_real(w.monthly, m.theta, c, t, ActionConstraint{3.0, true}, r2);
  CHECK(std::abs(tight.actions[0]) <= std::abs(loose.actions[0]));
}

TEST_CASE("report writers") {
  BacktestReport r;
  r.setting.action_constraint = 1.5;
  r.setting.short_selling = false;
  r.mean_annual_return = 0.05;
  r.vol_annual_return = 0.0;
  r.sharpe = std::nan("");
  std::ostringstream os;
  write_report_csv(os, {r});
  CHECK(os.str().rfind("training,AC,SS,model,mean,volatility,SR\noc,1.5,no,EMVRS,0.05,0,", 0) == 0);
  const auto doc = nlohmann::json::parse(report_json({r}));
  CHECK(doc["reports"][0]["sharpe"].is_null());
  CHECK(doc["reports"][0]["model"] == "EMVRS");
  CHECK(parse_model_kind("emv") == ModelKind::kEMV);
  CHECK_THROWS_AS(parse_model_kind("mv"), ConfigError);
}
