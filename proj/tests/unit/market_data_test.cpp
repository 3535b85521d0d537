#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "doctest.h"
#include "emvrs/error.hpp"
#include "emvrs/market_data.hpp"
#include "oracles.hpp"

using namespace emvrs;
using namespace std::chrono;

namespace {

MarketSeries parse(const std::string& text, RateUnit unit = RateUnit::kDecimal) {
  std::istringstream in(text);
  return parse_series(in, unit);
}

int ingestion_row(const std::string& text) {
  try {
    parse(text);
  } catch (const IngestionError& e) {
    return static_cast<int>(e.row());
  }
  return -1;
}

/// Weekday series with a flat price from `first` to the day before `last`.
MarketSeries weekdays(const Date& first, const Date& last) {
  MarketSeries s;
  for (sys_days d = sys_days(first); d < sys_days(last); d += days(1)) {
    const weekday wd{d};
    if (wd == Saturday || wd == Sunday) continue;
    s.dates.push_back(Date(d));
    s.prices.push_back(100.0);
    s.rates.push_back(0.02);
  }
  return s;
}

HmmModel two_state_model() {
  HmmModel m;
  m.means = {0.01, -0.01};
  m.variances = {0.005 * 0.005, 0.02 * 0.02};
  m.trans.resize(2, 2);
  m.trans << 0.95, 0.05, 0.05, 0.95;
  m.init = Vector::Constant(2, 0.5);
  return m;
}

HmmModel random_model(std::mt19937_64& rng, std::size_t l) {
  std::uniform_real_distribution<double> mu(-1.0, 1.0), sd(0.3, 1.5), w(0.05, 1.0);
  HmmModel m;
  for (std::size_t s = 0; s < l; ++s) {
    m.means.push_back(mu(rng));
    const double v = sd(rng);
    m.variances.push_back(v * v);
  }
  std::sort(m.means.rbegin(), m.means.rend());
  const auto n = static_cast<Eigen::Index>(l);
  m.trans.resize(n, n);
  m.init.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m.trans(i, j) = w(rng);
    m.trans.row(i) /= m.trans.row(i).sum();
    m.init(i) = w(rng);
  }
  m.init /= m.init.sum();
  return m;
}

}  // namespace

TEST_CASE("dates parse and print") {
  const Date d = parse_date("2006-01-31");
  CHECK(d == Date{year{2006}, month{1}, day{31}});
  CHECK(format_date(d) == "2006-01-31");
  CHECK_THROWS_AS(parse_date("2006-02-30"), ArgumentError);
  CHECK_THROWS_AS(parse_date("06-01-31"), ArgumentError);
}

TEST_CASE("well-formed CSV") {
  const MarketSeries s = parse("date,price,rate\n2020-01-02,100,4.85\n2020-01-03,101,4.80\n2020-01-06,99.5,4.9\n",
                               RateUnit::kPercent);
  REQUIRE(s.size() == 3);
  CHECK(s.rates[0] == doctest::Approx(0.0485).epsilon(1e-14));
  CHECK(s.prices[2] == 99.5);
  CHECK(s.labels.empty());
  const MarketSeries no_rate = parse("date,price\n2020-01-02,100\n2020-01-03,101\n");
  CHECK(no_rate.rates == std::vector<double>{0.0, 0.0});
  const MarketSeries labelled = parse("date,price,rate,regime\n2020-01-02,100,0.01,2\n2020-01-03,101,0.01,1\n");
  CHECK(labelled.labels == std::vector<std::size_t>{1, 0});
  CHECK(parse_rate_unit("percent") == RateUnit::kPercent);
  CHECK_THROWS_AS(parse_rate_unit("bps"), ConfigError);
}

TEST_CASE("malformed rows name their row number") {
  CHECK(ingestion_row("date,price,rate\n2020-01-02,100,0.01\n2020-01-02,101,0.01\n") == 2);
  CHECK(ingestion_row("date,price,rate\n2020-01-02,100,0.01\n2020-01-01,101,0.01\n") == 2);
  CHECK(ingestion_row("date,price,rate\n2020-01-02,0,0.01\n") == 1);
  CHECK(ingestion_row("date,price,rate\n2020-01-02,100,0.01\n2020-01-03,-4,0.01\n") == 2);
  CHECK(ingestion_row("date,price,rate\n2020-01-02,abc,0.01\n") == 1);
  CHECK(ingestion_row("date,price,rate\n2020-01-02,100\n") == 1);
  CHECK(ingestion_row("date,price,rate\n,100,0.01\n") == 1);
  CHECK_THROWS_AS(parse("when,price\n2020-01-02,100\n"), IngestionError);
  CHECK_THROWS_AS(load_series("/nonexistent/series.csv"), MissingArtifactError);
}

TEST_CASE("series CSV round trip") {
  MarketSeries s = parse("date,price,rate\n2020-01-02,100,0.01\n2020-01-03,101.25,0.0125\n");
  s.labels = {0, 1};
  std::ostringstream os;
  write_series_csv(os, s);
  const MarketSeries back = parse(os.str());
  CHECK(back.prices == s.prices);
  CHECK(back.rates == s.rates);
  CHECK(back.labels == s.labels);
}

TEST_CASE("returns and normalisation") {
  const std::vector<double> r = log_returns({100.0, 110.0, 99.0});
  REQUIRE(r.size() == 2);
  CHECK(r[0] == doctest::Approx(std::log(1.1)));
  CHECK(r[1] == doctest::Approx(std::log(0.9)));
  CHECK(normalize_prices({50.0, 75.0}) == std::vector<double>{1.0, 1.5});
}

TEST_CASE("single-state HMM equals the sample moments") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.002, 0.01);
  std::vector<double> x(500);
  for (double& v : x) v = n(rng);
  const HmmFit fit = fit_hmm(x, 1);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= 500.0;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= 500.0;
  CHECK(fit.model.means[0] == doctest::Approx(mean).epsilon(1e-10));
  CHECK(fit.model.variances[0] == doctest::Approx(var).epsilon(1e-10));
  const std::vector<std::size_t> path = viterbi(fit.model, x);
  CHECK(std::all_of(path.begin(), path.end(), [](std::size_t s) { return s == 0; }));
}

TEST_CASE("generate and recover a two-state HMM") {
  const HmmModel truth = two_state_model();
  Rng rng = make_rng(77, Stream::kHmmSynthetic);
  const HmmSample sample = sample_hmm(truth, 3000, rng);
  const HmmFit fit = fit_hmm(sample.returns, 2);
  // State 0 carries the larger mean, which matches the generating order.
  CHECK(std::abs(fit.model.means[0] - 0.01) < 0.002);
  CHECK(std::abs(fit.model.means[1] + 0.01) < 0.002);
  CHECK(fit.converged);
  for (std::size_t k = 1; k < fit.log_likelihood.size(); ++k)
    CHECK(fit.log_likelihood[k] >= fit.log_likelihood[k - 1] - 1e-9 * std::abs(fit.log_likelihood[k - 1]));
  const std::vector<std::size_t> states = viterbi(fit.model, sample.returns);
  std::size_t agree = 0;
  for (std::size_t k = 0; k < states.size(); ++k) agree += states[k] == sample.states[k];
  CHECK(static_cast<double>(agree) / static_cast<double>(states.size()) > 0.9);
  CHECK_NOTHROW(fit.model.validate());
}

TEST_CASE("degenerate variance is floored with a warning") {
  std::vector<double> x(200, 0.0);
  for (std::size_t k = 0; k < 100; ++k) x[k] = 0.01 * static_cast<double>(k % 7);
  const HmmFit fit = fit_hmm(x, 2);
  CHECK(*std::min_element(fit.model.variances.begin(), fit.model.variances.end()) >= 1e-8);
  CHECK(!fit.warnings.empty());
}

TEST_CASE("Viterbi against exhaustive enumeration") {
  std::mt19937_64 rng(123);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t l = 2 + static_cast<std::size_t>(trial % 2);
    const std::size_t len = l == 2 ? 8 : 6;
    const HmmModel m = random_model(rng, l);
    std::vector<double> x(len);
    for (double& v : x) v = n(rng);
    CHECK(viterbi(m, x) == test::brute_force_viterbi(m.means, m.variances, m.trans, m.init, x));
  }
}

TEST_CASE("Viterbi follows dominant emissions") {
  HmmModel m;
  m.means = {1.0, -1.0};
  m.variances = {0.01, 0.01};
  m.trans.resize(2, 2);
  m.trans << 0.5, 0.5, 0.5, 0.5;
  m.init = Vector::Constant(2, 0.5);
  const std::vector<double> x = {1.0, -1.1, 0.9, 0.95, -1.0, 1.05};
  CHECK(viterbi(m, x) == std::vector<std::size_t>{0, 1, 0, 0, 1, 0});
  CHECK(labels_for_prices({0, 1, 1}) == std::vector<std::size_t>{0, 0, 1, 1});
}

TEST_CASE("log-likelihood matches direct enumeration") {
  std::mt19937_64 rng(8);
  const HmmModel m = random_model(rng, 2);
  const std::vector<double> x = {0.3, -0.2, 0.9};
  double total = 0.0;
  for (int code = 0; code < 8; ++code) {
    std::size_t s[3] = {static_cast<std::size_t>(code >> 2 & 1), static_cast<std::size_t>(code >> 1 & 1),
                        static_cast<std::size_t>(code & 1)};
    double lp = std::log(m.init(static_cast<Eigen::Index>(s[0]))) + m.log_emission(s[0], x[0]);
    for (int k = 1; k < 3; ++k)
      lp += std::log(m.trans(static_cast<Eigen::Index>(s[k - 1]), static_cast<Eigen::Index>(s[k]))) +
            m.log_emission(s[k], x[static_cast<std::size_t>(k)]);
    total += std::exp(lp);
  }
  CHECK(hmm_log_likelihood(m, x) == doctest::Approx(std::log(total)).epsilon(1e-12));
}

TEST_CASE("rolling windows over twelve years") {
  const MarketSeries s = weekdays(Date{year{2004}, month{1}, day{1}}, Date{year{2016}, month{1}, day{1}});
  WindowSpec spec;
  const std::vector<SeriesWindow> w = rolling_windows(s, spec);
  REQUIRE(w.size() == 25);
  for (std::size_t k = 1; k < w.size(); ++k) CHECK(sys_days(w[k].nominal_start) > sys_days(w[k - 1].nominal_start));
  CHECK(w.back().nominal_start == Date{year{2006}, month{1}, day{1}});
  CHECK(w.front().nominal_end == Date{year{2014}, month{1}, day{1}});
  for (const SeriesWindow& win : w) {
    CHECK(win.data.size() == win.end - win.begin);
    CHECK(sys_days(win.data.dates.front()) >= sys_days(win.nominal_start));
    CHECK(sys_days(win.data.dates.back()) < sys_days(win.nominal_end));
    CHECK(sys_days(win.nominal_end) - sys_days(win.data.dates.back()) <= days(4));
  }

  spec.step_months = 60;
  CHECK(rolling_windows(s, spec).size() == 1);
  spec.count = 2;
  CHECK_THROWS_AS(rolling_windows(s, spec), ArgumentError);
  spec.step_months = 0;
  CHECK_THROWS_AS(spec.validate(), ArgumentError);
}

TEST_CASE("protocol windows starting in 2006") {
  const MarketSeries s = weekdays(Date{year{2004}, month{1}, day{1}}, Date{year{2017}, month{12}, day{1}});
  WindowSpec spec;
  spec.start = Date{year{2006}, month{1}, day{1}};
  const std::vector<SeriesWindow> w = rolling_windows(s, spec);
  CHECK(w.size() == 24);
  CHECK(w.back().nominal_start == Date{year{2007}, month{12}, day{1}});
}

TEST_CASE("monthly sampling") {
  const MarketSeries s = weekdays(Date{year{2010}, month{1}, day{4}}, Date{year{2010}, month{5}, day{1}});
  const std::vector<std::size_t> rows = monthly_sample_rows(s, 3);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == 0);
  CHECK(s.dates[rows[1]] == Date{year{2010}, month{1}, day{29}});
  CHECK(s.dates[rows[2]] == Date{year{2010}, month{2}, day{26}});
  CHECK(s.dates[rows[3]] == Date{year{2010}, month{3}, day{31}});
  CHECK_THROWS_AS(monthly_sample_rows(s, 5), ArgumentError);
}

TEST_CASE("simulated market follows its regimes") {
  SyntheticMarket m;
  m.q = GeneratorMatrix::from_rows({{-0.5, 0.5}, {1.5, -1.5}});
  m.theta.sigma = {0.15, 0.30};
  m.theta.rho = {0.8, -0.6};
  m.theta.r = {0.01, 0.005};
  Rng rng = make_rng(4, Stream::kHmmSynthetic);
  const MarketSeries s = simulate_market(m, Date{year{2004}, month{1}, day{1}}, 12.0, 0, rng);
  CHECK_NOTHROW(s.validate());
  CHECK(s.prices.front() == 100.0);
  CHECK(s.labels.size() == s.size());
  for (std::size_t k = 0; k < s.size(); ++k) CHECK(s.rates[k] == m.theta.r[s.labels[k]]);
  std::size_t bear = 0;
  for (std::size_t a : s.labels) bear += a;
  // Stationary bear share is 0.5 / 2 = 0.25.
  const double share = static_cast<double>(bear) / static_cast<double>(s.size());
  CHECK(share > 0.05);
  CHECK(share < 0.6);

  const MarketSeries slice = s.slice(10, 20);
  CHECK(slice.size() == 10);
  CHECK(slice.dates.front() == s.dates[10]);
}
