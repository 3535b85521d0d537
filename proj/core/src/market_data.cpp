#include "emvrs/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "emvrs/error.hpp"
#include "emvrs/io.hpp"

namespace emvrs {

namespace {

constexpr double kVarianceCollapse = 1e-10;
constexpr double kVarianceFloor = 1e-8;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_int(std::string_view s, int& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

Date add_months(const Date& d, int months) {
  const std::chrono::year_month ym = std::chrono::year_month{d.year(), d.month()} +
                                     std::chrono::months{months};
  const Date candidate{ym.year(), ym.month(), d.day()};
  if (candidate.ok()) return candidate;
  return Date{std::chrono::year_month_day_last{ym.year(), std::chrono::month_day_last{ym.month()}}};
}

Date add_years(const Date& d, double years) {
  const double whole = std::round(years * 12.0);
  if (std::abs(whole - years * 12.0) > 1e-9) {
    throw ArgumentError("window span must be a whole number of months");
  }
  return add_months(d, static_cast<int>(whole));
}

// Weekdays strictly after `from` and strictly before `to`.
long weekdays_between(const Date& from, const Date& to) {
  const std::chrono::sys_days a{from};
  const std::chrono::sys_days b{to};
  long n = 0;
  for (auto d = a + std::chrono::days{1}; d < b; d += std::chrono::days{1}) {
    const unsigned wd = std::chrono::weekday{d}.c_encoding();
    if (wd != 0 && wd != 6) ++n;
  }
  return n;
}

// Weighted mean/variance of returns per cluster assignment.
void refit_clusters(const std::vector<double>& x, const std::vector<std::size_t>& assign,
                    std::vector<double>& means, std::vector<double>& vars) {
  const std::size_t k = means.size();
  std::vector<double> sum(k, 0.0), sq(k, 0.0), cnt(k, 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    sum[assign[t]] += x[t];
    cnt[assign[t]] += 1.0;
  }
  for (std::size_t s = 0; s < k; ++s)
    if (cnt[s] > 0.0) means[s] = sum[s] / cnt[s];
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double dev = x[t] - means[assign[t]];
    sq[assign[t]] += dev * dev;
  }
  for (std::size_t s = 0; s < k; ++s) vars[s] = cnt[s] > 0.0 ? sq[s] / cnt[s] : 0.0;
}

// Sorted-quantile seeding followed by Lloyd iterations.
void kmeans_1d(const std::vector<double>& x, std::size_t k, std::uint64_t seed,
               std::vector<double>& means, std::vector<double>& vars) {
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  means.assign(k, 0.0);
  vars.assign(k, 0.0);
  for (std::size_t s = 0; s < k; ++s) {
    const double q = (static_cast<double>(s) + 0.5) / static_cast<double>(k);
    means[s] = sorted[static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1))];
  }
  Rng rng = make_rng(seed, Stream::kHmmSynthetic, 0, 1);
  std::vector<std::size_t> assign(x.size(), 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t t = 0; t < x.size(); ++t) {
      std::size_t best = 0;
      for (std::size_t s = 1; s < k; ++s) {
        if (std::abs(x[t] - means[s]) < std::abs(x[t] - means[best])) best = s;
      }
      changed = changed || best != assign[t];
      assign[t] = best;
      ++counts[best];
    }
    for (std::size_t s = 0; s < k; ++s) {
      if (counts[s] == 0) {
        means[s] = x[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(x.size()))];
        changed = true;
      }
    }
    const std::vector<double> before = means;
    refit_clusters(x, assign, means, vars);
    if (!changed && before == means) break;
  }
}

struct Posterior {
  std::vector<double> gamma;  // T x k, row-major
  Matrix xi_sum;              // expected transition counts
  double log_likelihood = 0.0;
};

// Scaled forward-backward with per-step log-emission shifts.
Posterior forward_backward(const HmmModel& m, const std::vector<double>& x) {
  const std::size_t k = m.n_states();
  const std::size_t n = x.size();
  std::vector<double> emit(n * k), alpha(n * k), beta(n * k), scale(n);
  double ll = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < k; ++s) {
      emit[t * k + s] = m.log_emission(s, x[t]);
      top = std::max(top, emit[t * k + s]);
    }
    for (std::size_t s = 0; s < k; ++s) emit[t * k + s] = std::exp(emit[t * k + s] - top);
    ll += top;
  }
  for (std::size_t t = 0; t < n; ++t) {
    double c = 0.0;
    for (std::size_t s = 0; s < k; ++s) {
      double prior = 0.0;
      if (t == 0) {
        prior = m.init(static_cast<Eigen::Index>(s));
      } else {
        for (std::size_t r = 0; r < k; ++r) {
          prior += alpha[(t - 1) * k + r] *
                   m.trans(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s));
        }
      }
      alpha[t * k + s] = prior * emit[t * k + s];
      c += alpha[t * k + s];
    }
    if (!(c > 0.0)) throw NumericalError("HMM forward pass underflowed at step " + std::to_string(t));
    for (std::size_t s = 0; s < k; ++s) alpha[t * k + s] /= c;
    scale[t] = c;
    ll += std::log(c);
  }
  for (std::size_t s = 0; s < k; ++s) beta[(n - 1) * k + s] = 1.0;
  for (std::size_t t = n - 1; t-- > 0;) {
    for (std::size_t r = 0; r < k; ++r) {
      double acc = 0.0;
      for (std::size_t s = 0; s < k; ++s) {
        acc += m.trans(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) *
               emit[(t + 1) * k + s] * beta[(t + 1) * k + s];
      }
      beta[t * k + r] = acc / scale[t + 1];
    }
  }
  Posterior post;
  post.log_likelihood = ll;
  post.gamma.resize(n * k);
  for (std::size_t t = 0; t < n; ++t) {
    double norm = 0.0;
    for (std::size_t s = 0; s < k; ++s) norm += alpha[t * k + s] * beta[t * k + s];
    for (std::size_t s = 0; s < k; ++s) post.gamma[t * k + s] = alpha[t * k + s] * beta[t * k + s] / norm;
  }
  post.xi_sum = Matrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t t = 0; t + 1 < n; ++t) {
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t s = 0; s < k; ++s) {
        const auto ri = static_cast<Eigen::Index>(r);
        const auto si = static_cast<Eigen::Index>(s);
        post.xi_sum(ri, si) += alpha[t * k + r] * m.trans(ri, si) * emit[(t + 1) * k + s] *
                               beta[(t + 1) * k + s] / scale[t + 1];
      }
    }
  }
  return post;
}

HmmModel sorted_by_mean(const HmmModel& m) {
  const std::size_t k = m.n_states();
  std::vector<std::size_t> order(k);
  for (std::size_t s = 0; s < k; ++s) order[s] = s;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return m.means[a] > m.means[b]; });
  HmmModel out = m;
  for (std::size_t a = 0; a < k; ++a) {
    const auto ai = static_cast<Eigen::Index>(a);
    const auto oa = static_cast<Eigen::Index>(order[a]);
    out.means[a] = m.means[order[a]];
    out.variances[a] = m.variances[order[a]];
    out.init(ai) = m.init(oa);
    for (std::size_t b = 0; b < k; ++b) {
      out.trans(ai, static_cast<Eigen::Index>(b)) = m.trans(oa, static_cast<Eigen::Index>(order[b]));
    }
  }
  return out;
}

}  // namespace

Date parse_date(std::string_view text) {
  text = trim(text);
  int y = 0, mo = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !parse_int(text.substr(0, 4), y) ||
      !parse_int(text.substr(5, 2), mo) || !parse_int(text.substr(8, 2), d)) {
    throw ArgumentError("not an ISO date (YYYY-MM-DD): '" + std::string(text) + "'");
  }
  const Date out{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                 std::chrono::day{static_cast<unsigned>(d)}};
  if (!out.ok()) throw ArgumentError("invalid calendar date: '" + std::string(text) + "'");
  return out;
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

MarketSeries MarketSeries::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw ArgumentError("series slice out of range");
  MarketSeries out;
  const auto b = static_cast<std::ptrdiff_t>(begin);
  const auto e = static_cast<std::ptrdiff_t>(end);
  out.dates.assign(dates.begin() + b, dates.begin() + e);
  out.prices.assign(prices.begin() + b, prices.begin() + e);
  out.rates.assign(rates.begin() + b, rates.begin() + e);
  if (!labels.empty()) out.labels.assign(labels.begin() + b, labels.begin() + e);
  return out;
}

void MarketSeries::validate() const {
  if (prices.size() != dates.size() || rates.size() != dates.size()) {
    throw IngestionError("dates, prices and rates differ in length");
  }
  if (!labels.empty() && labels.size() != dates.size()) {
    throw IngestionError("regime labels and dates differ in length");
  }
  for (std::size_t k = 0; k < size(); ++k) {
    if (k > 0 && !(dates[k - 1] < dates[k])) {
      throw IngestionError("dates must be strictly increasing: " + format_date(dates[k]), k + 1);
    }
    if (!(prices[k] > 0.0) || !std::isfinite(prices[k])) {
      throw IngestionError("price must be positive and finite", k + 1);
    }
    if (!std::isfinite(rates[k])) throw IngestionError("rate must be finite", k + 1);
  }
}

RateUnit parse_rate_unit(std::string_view text) {
  if (text == "decimal") return RateUnit::kDecimal;
  if (text == "percent") return RateUnit::kPercent;
  throw ConfigError("rate unit must be 'decimal' or 'percent', got '" + std::string(text) + "'");
}

MarketSeries parse_series(std::istream& in, RateUnit unit) {
  std::string line;
  if (!std::getline(in, line)) throw IngestionError("empty market data file");
  const std::vector<std::string> header = split_csv_line(trim(line));
  int date_col = -1, price_col = -1, rate_col = -1, regime_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string_view h = trim(header[c]);
    if (h == "date") date_col = static_cast<int>(c);
    else if (h == "price") price_col = static_cast<int>(c);
    else if (h == "rate") rate_col = static_cast<int>(c);
    else if (h == "regime") regime_col = static_cast<int>(c);
  }
  if (date_col < 0 || price_col < 0) throw IngestionError("header must contain 'date' and 'price'");
  const double rate_scale = unit == RateUnit::kPercent ? 0.01 : 1.0;

  MarketSeries out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> cells = split_csv_line(trim(line));
    const auto need = static_cast<std::size_t>(std::max({date_col, price_col, rate_col, regime_col}));
    if (cells.size() <= need) throw IngestionError("too few columns", row);
    Date d;
    try {
      d = parse_date(cells[static_cast<std::size_t>(date_col)]);
    } catch (const ArgumentError& e) {
      throw IngestionError(e.what(), row);
    }
    if (!out.dates.empty() && !(out.dates.back() < d)) {
      throw IngestionError(std::string(out.dates.back() == d ? "duplicate" : "unsorted") +
                               " date " + format_date(d),
                           row);
    }
    double price = 0.0;
    if (!parse_double(trim(cells[static_cast<std::size_t>(price_col)]), price)) {
      throw IngestionError("unparsable price '" + cells[static_cast<std::size_t>(price_col)] + "'", row);
    }
    if (!(price > 0.0) || !std::isfinite(price)) throw IngestionError("price must be positive", row);
    double rate = 0.0;
    if (rate_col >= 0) {
      const std::string_view cell = trim(cells[static_cast<std::size_t>(rate_col)]);
      if (!cell.empty() && !parse_double(cell, rate)) {
        throw IngestionError("unparsable rate '" + std::string(cell) + "'", row);
      }
    }
    if (regime_col >= 0) {
      int regime = 0;
      if (!parse_int(trim(cells[static_cast<std::size_t>(regime_col)]), regime) || regime < 1) {
        throw IngestionError("regime must be a positive integer", row);
      }
      out.labels.push_back(static_cast<std::size_t>(regime - 1));
    }
    out.dates.push_back(d);
    out.prices.push_back(price);
    out.rates.push_back(rate * rate_scale);
  }
  if (out.empty()) throw IngestionError("market data file has no rows");
  out.validate();
  return out;
}

MarketSeries load_series(const std::filesystem::path& path, RateUnit unit) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError("market data not found: " + path.string());
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open market data: " + path.string());
  return parse_series(in, unit);
}

void write_series_csv(std::ostream& os, const MarketSeries& series) {
  series.validate();
  const bool labelled = !series.labels.empty();
  os << "date,price,rate" << (labelled ? ",regime" : "") << '\n';
  for (std::size_t k = 0; k < series.size(); ++k) {
    os << format_date(series.dates[k]) << ',' << format_double(series.prices[k]) << ','
       << format_double(series.rates[k]);
    if (labelled) os << ',' << (series.labels[k] + 1);
    os << '\n';
  }
}

std::vector<double> log_returns(const std::vector<double>& prices) {
  if (prices.size() < 2) throw ArgumentError("log returns need at least two prices");
  std::vector<double> out(prices.size() - 1);
  for (std::size_t k = 0; k + 1 < prices.size(); ++k) out[k] = std::log(prices[k + 1] / prices[k]);
  return out;
}

std::vector<double> normalize_prices(const std::vector<double>& prices) {
  if (prices.empty() || !(prices.front() > 0.0)) throw ArgumentError("normalisation needs a positive first price");
  std::vector<double> out(prices.size());
  for (std::size_t k = 0; k < prices.size(); ++k) out[k] = prices[k] / prices.front();
  return out;
}

void HmmModel::validate() const {
  const std::size_t k = n_states();
  const auto ki = static_cast<Eigen::Index>(k);
  if (k == 0 || variances.size() != k || trans.rows() != ki || trans.cols() != ki || init.size() != ki) {
    throw ArgumentError("HMM dimensions are inconsistent");
  }
  for (double v : variances)
    if (!(v > 0.0)) throw ArgumentError("HMM variances must be > 0");
  for (Eigen::Index r = 0; r < ki; ++r) {
    if (std::abs(trans.row(r).sum() - 1.0) > 1e-10 || (trans.row(r).array() < 0.0).any()) {
      throw ArgumentError("HMM transition rows must be probability vectors");
    }
  }
  if (std::abs(init.sum() - 1.0) > 1e-10 || (init.array() < 0.0).any()) {
    throw ArgumentError("HMM initial distribution must sum to 1");
  }
}

double HmmModel::log_emission(std::size_t s, double x) const {
  const double v = variances[s];
  const double dev = x - means[s];
  return -0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * dev * dev / v;
}

double hmm_log_likelihood(const HmmModel& model, const std::vector<double>& returns) {
  model.validate();
  if (returns.empty()) return 0.0;
  return forward_backward(model, returns).log_likelihood;
}

HmmFit fit_hmm(const std::vector<double>& returns, std::size_t n_states, double tol,
               std::size_t max_iter, std::uint64_t seed) {
  if (n_states < 1) throw ArgumentError("HMM needs at least one state");
  if (returns.size() < 10 * n_states) {
    throw ArgumentError("HMM fit needs at least " + std::to_string(10 * n_states) + " returns, got " +
                        std::to_string(returns.size()));
  }
  for (double r : returns)
    if (!std::isfinite(r)) throw ArgumentError("HMM input contains a non-finite return");
  const std::size_t k = n_states;
  const auto ki = static_cast<Eigen::Index>(k);
  const std::size_t n = returns.size();

  HmmFit fit;
  HmmModel& m = fit.model;
  kmeans_1d(returns, k, seed, m.means, m.variances);
  auto floor_variances = [&](const char* stage) {
    for (std::size_t s = 0; s < k; ++s) {
      if (!(m.variances[s] >= kVarianceCollapse)) {
        std::ostringstream msg;
        msg << stage << ": variance of state " << (s + 1) << " collapsed to " << m.variances[s]
            << "; floored at " << kVarianceFloor;
        fit.warnings.push_back(msg.str());
        m.variances[s] = kVarianceFloor;
      }
    }
  };
  floor_variances("initialisation");
  if (k == 1) {
    m.trans = Matrix::Ones(1, 1);
  } else {
    m.trans = Matrix::Constant(ki, ki, 0.1 / static_cast<double>(k - 1));
    m.trans.diagonal().setConstant(0.9);
  }
  m.init = Vector::Constant(ki, 1.0 / static_cast<double>(k));

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    const Posterior post = forward_backward(m, returns);
    fit.log_likelihood.push_back(post.log_likelihood);
    fit.iterations = iter + 1;
    if (iter > 0) {
      const double prev = fit.log_likelihood[iter - 1];
      if (std::abs(post.log_likelihood - prev) <= tol * std::max(1.0, std::abs(prev))) {
        fit.converged = true;
        break;
      }
    }
    std::vector<double> occ(k, 0.0), occ_head(k, 0.0), wsum(k, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t s = 0; s < k; ++s) {
        const double g = post.gamma[t * k + s];
        occ[s] += g;
        if (t + 1 < n) occ_head[s] += g;
        wsum[s] += g * returns[t];
      }
    }
    for (std::size_t s = 0; s < k; ++s) {
      m.init(static_cast<Eigen::Index>(s)) = post.gamma[s];
      m.means[s] = occ[s] > 0.0 ? wsum[s] / occ[s] : m.means[s];
    }
    for (std::size_t s = 0; s < k; ++s) {
      double sq = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        const double dev = returns[t] - m.means[s];
        sq += post.gamma[t * k + s] * dev * dev;
      }
      m.variances[s] = occ[s] > 0.0 ? sq / occ[s] : 0.0;
    }
    floor_variances("EM step");
    for (std::size_t r = 0; r < k; ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      if (occ_head[r] > 0.0) {
        m.trans.row(ri) = post.xi_sum.row(ri) / occ_head[r];
        m.trans.row(ri) /= m.trans.row(ri).sum();
      }
    }
    m.init /= m.init.sum();
  }
  m = sorted_by_mean(m);
  return fit;
}

std::vector<std::size_t> viterbi(const HmmModel& model, const std::vector<double>& returns) {
  model.validate();
  const std::size_t k = model.n_states();
  const std::size_t n = returns.size();
  if (n == 0) return {};
  const double neg_inf = -std::numeric_limits<double>::infinity();
  auto safe_log = [](double p) { return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity(); };
  Matrix log_trans(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (Eigen::Index r = 0; r < log_trans.rows(); ++r)
    for (Eigen::Index s = 0; s < log_trans.cols(); ++s) log_trans(r, s) = safe_log(model.trans(r, s));

  std::vector<double> score(k), next(k);
  std::vector<std::size_t> back(n * k, 0);
  for (std::size_t s = 0; s < k; ++s) {
    score[s] = safe_log(model.init(static_cast<Eigen::Index>(s))) + model.log_emission(s, returns[0]);
  }
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t s = 0; s < k; ++s) {
      double best = neg_inf;
      std::size_t arg = 0;
      for (std::size_t r = 0; r < k; ++r) {
        const double cand = score[r] + log_trans(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s));
        if (cand > best) {
          best = cand;
          arg = r;
        }
      }
      next[s] = best + model.log_emission(s, returns[t]);
      back[t * k + s] = arg;
    }
    score.swap(next);
  }
  std::size_t last = 0;
  for (std::size_t s = 1; s < k; ++s)
    if (score[s] > score[last]) last = s;
  std::vector<std::size_t> path(n);
  path[n - 1] = last;
  for (std::size_t t = n - 1; t > 0; --t) path[t - 1] = back[t * k + path[t]];
  return path;
}

std::vector<std::size_t> labels_for_prices(const std::vector<std::size_t>& return_states) {
  if (return_states.empty()) return {};
  std::vector<std::size_t> out(return_states.size() + 1);
  out[0] = return_states[0];
  for (std::size_t k = 0; k < return_states.size(); ++k) out[k + 1] = return_states[k];
  return out;
}

HmmSample sample_hmm(const HmmModel& model, std::size_t length, Rng& rng) {
  model.validate();
  HmmSample out;
  out.states.resize(length);
  out.returns.resize(length);
  std::size_t s = 0;
  for (std::size_t t = 0; t < length; ++t) {
    s = t == 0 ? sample_categorical(model.init.transpose(), rng)
               : sample_categorical(model.trans.row(static_cast<Eigen::Index>(s)), rng);
    out.states[t] = s;
    out.returns[t] = model.means[s] + std::sqrt(model.variances[s]) * standard_normal(rng);
  }
  return out;
}

void SyntheticMarket::validate() const {
  theta.validate();
  if (theta.regimes() != q.size()) throw ArgumentError("synthetic market: theta and Q disagree on regimes");
  if (!(trading_days > 0.0)) throw ArgumentError("synthetic market: trading_days must be > 0");
}

MarketSeries simulate_market(const SyntheticMarket& market, const Date& first, double years,
                             std::size_t alpha0, Rng& rng) {
  market.validate();
  if (alpha0 >= market.q.size()) throw ArgumentError("synthetic market: initial regime out of range");
  const std::chrono::sys_days stop{add_years(first, years)};
  const double dt = 1.0 / market.trading_days;
  const Matrix step = transition_matrix(market.q, dt);
  MarketSeries out;
  std::size_t regime = alpha0;
  double price = 100.0;
  for (std::chrono::sys_days day{first}; day < stop; day += std::chrono::days{1}) {
    const std::chrono::weekday wd{day};
    if (wd == std::chrono::Saturday || wd == std::chrono::Sunday) continue;
    if (!out.empty()) {
      regime = sample_categorical(step.row(static_cast<Eigen::Index>(regime)), rng);
      const double s = market.theta.sigma[regime];
      const double mu = market.theta.r[regime] + market.theta.rho[regime] * s;
      price *= std::exp((mu - 0.5 * s * s) * dt + s * std::sqrt(dt) * standard_normal(rng));
    }
    out.dates.emplace_back(day);
    out.prices.push_back(price);
    out.rates.push_back(market.theta.r[regime]);
    out.labels.push_back(regime);
  }
  return out;
}

void WindowSpec::validate() const {
  if (!(span_years > 0.0)) throw ArgumentError("window span must be > 0");
  if (step_months <= 0) throw ArgumentError("window step must be > 0 months");
}

std::vector<SeriesWindow> rolling_windows(const MarketSeries& series, const WindowSpec& spec) {
  spec.validate();
  if (series.empty()) throw ArgumentError("rolling windows need a non-empty series");
  const Date first = spec.start.value_or(series.dates.front());
  const Date last = series.dates.back();
  std::vector<SeriesWindow> out;
  for (std::size_t w = 0; spec.count == 0 || w < spec.count; ++w) {
    const Date start = add_months(first, static_cast<int>(w) * spec.step_months);
    const Date end = add_years(start, spec.span_years);
    const bool fits = !(last >= end) ? weekdays_between(last, end) <= 1 : true;
    if (!fits) break;
    SeriesWindow win{start, end, 0, 0, {}};
    win.begin = static_cast<std::size_t>(
        std::lower_bound(series.dates.begin(), series.dates.end(), start) - series.dates.begin());
    win.end = static_cast<std::size_t>(
        std::lower_bound(series.dates.begin(), series.dates.end(), end) - series.dates.begin());
    if (win.end <= win.begin + 1) break;
    win.data = series.slice(win.begin, win.end);
    out.push_back(std::move(win));
  }
  if (out.size() < spec.count || out.empty()) {
    const Date need_end =
        add_years(add_months(first, static_cast<int>(std::max<std::size_t>(spec.count, 1) - 1) *
                                        spec.step_months),
                  spec.span_years);
    throw ArgumentError("insufficient data for rolling windows: need " + format_date(first) + " to " +
                        format_date(need_end) + ", have " + format_date(series.dates.front()) + " to " +
                        format_date(last));
  }
  return out;
}

std::vector<std::size_t> monthly_sample_rows(const MarketSeries& series, std::size_t months) {
  if (series.empty()) throw ArgumentError("monthly sampling needs a non-empty series");
  std::vector<std::size_t> rows{0};
  for (std::size_t k = 0; k < series.size(); ++k) {
    const bool month_end = k + 1 == series.size() ||
                           series.dates[k + 1].month() != series.dates[k].month() ||
                           series.dates[k + 1].year() != series.dates[k].year();
    if (month_end && k > 0) rows.push_back(k);
    if (rows.size() == months + 1) return rows;
  }
  throw ArgumentError("series covers " + std::to_string(rows.size() - 1) + " month ends, need " +
                      std::to_string(months));
}

}  // namespace emvrs
