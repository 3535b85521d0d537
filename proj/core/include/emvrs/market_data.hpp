#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emvrs/market_params.hpp"
#include "emvrs/regime_markov.hpp"

namespace emvrs {

using Date = std::chrono::year_month_day;

/// Parses YYYY-MM-DD. Throws ArgumentError on anything else.
Date parse_date(std::string_view text);
std::string format_date(const Date& d);

/// Daily index levels and annualised risk-free rates (decimal) on trading dates.
struct MarketSeries {
  std::vector<Date> dates;
  std::vector<double> prices;
  std::vector<double> rates;
  std::vector<std::size_t> labels;  ///< optional 0-based regime per row; empty when unlabelled

  std::size_t size() const { return dates.size(); }
  bool empty() const { return dates.empty(); }
  /// Rows [begin, end).
  MarketSeries slice(std::size_t begin, std::size_t end) const;
  /// Strictly increasing dates, positive prices, finite rates, equal lengths.
  /// Labels, when present, must match the row count.
  void validate() const;
};

enum class RateUnit { kDecimal, kPercent };

RateUnit parse_rate_unit(std::string_view text);

/// CSV header `date,price,rate`; the rate column is optional and defaults to 0.
/// An optional 1-based `regime` column fills `labels`. Data rows are numbered
/// from 1 in error messages.
MarketSeries parse_series(std::istream& in, RateUnit unit = RateUnit::kDecimal);
/// Throws MissingArtifactError when the file does not exist.
MarketSeries load_series(const std::filesystem::path& path, RateUnit unit = RateUnit::kDecimal);

/// Writes `date,price,rate` and, when the series is labelled, a 1-based `regime` column.
void write_series_csv(std::ostream& os, const MarketSeries& series);

/// log(S_{k+1} / S_k); one entry fewer than the input.
std::vector<double> log_returns(const std::vector<double>& prices);

/// Prices divided by the first price.
std::vector<double> normalize_prices(const std::vector<double>& prices);

/// Gaussian-emission hidden Markov model. State 0 has the highest emission mean.
struct HmmModel {
  std::vector<double> means;
  std::vector<double> variances;
  Matrix trans;
  Vector init;

  std::size_t n_states() const { return means.size(); }
  void validate() const;
  double log_emission(std::size_t s, double x) const;
};

struct HmmFit {
  HmmModel model;
  std::vector<double> log_likelihood;  ///< one entry per EM iteration, before the update
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

/// log p(returns | model) by the scaled forward recursion.
double hmm_log_likelihood(const HmmModel& model, const std::vector<double>& returns);

/// Baum-Welch from a deterministic 1-D k-means start with a 0.9 sticky diagonal.
/// Stops when the relative log-likelihood improvement drops below tol. Variances
/// that collapse below 1e-10 are floored at 1e-8 and reported in `warnings`.
/// `seed` only reseeds empty k-means clusters.
HmmFit fit_hmm(const std::vector<double>& returns, std::size_t n_states, double tol = 1e-8,
               std::size_t max_iter = 500, std::uint64_t seed = 0);

/// Most probable state path (0-based), log space, ties toward the lower index.
std::vector<std::size_t> viterbi(const HmmModel& model, const std::vector<double>& returns);

/// Per-price-row labels from per-return states: row 0 takes the first return's
/// state and row k >= 1 the state of the return ending at k.
std::vector<std::size_t> labels_for_prices(const std::vector<std::size_t>& return_states);

/// Draws a path and Gaussian emissions from the model.
struct HmmSample {
  std::vector<std::size_t> states;
  std::vector<double> returns;
};
HmmSample sample_hmm(const HmmModel& model, std::size_t length, Rng& rng);

/// Regime-switching geometric Brownian market observed on weekdays.
struct SyntheticMarket {
  GeneratorMatrix q;          ///< regime generator, 1/year
  MarketParams theta;         ///< per-regime sigma, rho and rate
  double trading_days = 252.0;

  void validate() const;
};

/// Weekday closes from `first` through the day before `first + years`, labelled
/// with the regime in force over the preceding day. Prices start at 100.
MarketSeries simulate_market(const SyntheticMarket& market, const Date& first, double years,
                             std::size_t alpha0, Rng& rng);

struct WindowSpec {
  double span_years = 10.0;
  int step_months = 1;
  std::size_t count = 0;  ///< 0 = as many as fit
  std::optional<Date> start;  ///< first nominal start; defaults to the first observation

  void validate() const;
};

struct SeriesWindow {
  Date nominal_start;
  Date nominal_end;  ///< exclusive
  std::size_t begin = 0;  ///< row range [begin, end) in the parent series
  std::size_t end = 0;
  MarketSeries data;
};

/// Windows start at spec.start (or the first date) plus w * step months and cover
/// [start, start + span). A window fits when at most one weekday between the
/// last observation and the nominal end is missing. Throws ArgumentError when
/// fewer than spec.count windows fit.
std::vector<SeriesWindow> rolling_windows(const MarketSeries& series, const WindowSpec& spec);

/// Row indices of the first observation followed by the last observation of
/// every calendar month; `months` entries after the first. Throws
/// ArgumentError when the series covers fewer months.
std::vector<std::size_t> monthly_sample_rows(const MarketSeries& series, std::size_t months);

}  // namespace emvrs
