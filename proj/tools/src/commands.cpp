#include "commands.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

#include "emvrs/error.hpp"
#include "emvrs/io.hpp"
#include "manifest.hpp"

namespace emvrs::cli {

namespace fs = std::filesystem;

Json effective_config(const CommonOptions& opt, const std::optional<std::string>& loss,
                      const std::optional<std::size_t>& epochs) {
  Json doc = load_json(opt.config);
  for (const std::string& o : opt.overrides) apply_override(doc, o);
  if (opt.seed) doc["seed"] = *opt.seed;
  if (opt.threads) doc["threads"] = *opt.threads;
  if (loss) doc["learning"]["loss"] = *loss;
  if (epochs) doc["learning"]["epochs"] = *epochs;
  return doc;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const MissingArtifactError*>(&e) != nullptr) return 3;
  if (dynamic_cast<const NumericalError*>(&e) != nullptr) return 4;
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return 2;
  if (dynamic_cast<const IngestionError*>(&e) != nullptr) return 2;
  if (dynamic_cast<const ArgumentError*>(&e) != nullptr) return 2;
  return 1;
}

namespace {

Json matrix_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Matrix matrix_from(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a non-empty matrix");
  const auto n = static_cast<Eigen::Index>(j.size());
  const auto m = static_cast<Eigen::Index>(j.front().size());
  Matrix out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m) {
      throw ConfigError(what + " must be rectangular");
    }
    for (Eigen::Index k = 0; k < m; ++k) out(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return out;
}

Json hmm_json(const HmmModel& m) {
  Json j;
  j["means"] = m.means;
  j["variances"] = m.variances;
  j["trans"] = matrix_json(m.trans);
  j["init"] = std::vector<double>(m.init.data(), m.init.data() + m.init.size());
  return j;
}

std::string csv_of(const std::function<void(std::ostream&)>& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

std::vector<double> abs_error(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::abs(a[i] - b[i]);
  return out;
}

std::string two_digits(std::size_t w) {
  std::string s = std::to_string(w);
  return s.size() < 2 ? "0" + s : s;
}

}  // namespace

void cmd_train_sim(const TrainOptions& opt) {
  const Json doc = effective_config(opt.common, opt.loss, opt.epochs);
  const SimConfig config = read_sim_config(doc);
  const Json canonical = sim_config_json(config);
  RunManifest manifest("train-sim", canonical, config.seed);
  manifest.add_input(opt.common.config);
  manifest.add_stream(stream_name(Stream::kBrownian));
  manifest.add_stream(stream_name(Stream::kRegime));

  const ParameterHistory history = train(config);
  const MarketParams& last = history.final_theta();

  Json summary;
  summary["loss"] = loss_kind_name(config.loss);
  summary["epochs"] = config.settings.n_epochs;
  summary["seed"] = config.seed;
  summary["theta_true"] = {{"sigma", config.theta_true.sigma}, {"rho", config.theta_true.rho}};
  summary["theta0"] = {{"sigma", config.theta0.sigma}, {"rho", config.theta0.rho}};
  summary["final_theta"] = {{"sigma", last.sigma}, {"rho", last.rho}};
  summary["abs_error"] = {{"sigma", abs_error(last.sigma, config.theta_true.sigma)},
                          {"rho", abs_error(last.rho, config.theta_true.rho)}};
  if (!history.epochs.empty()) summary["final_lambda"] = history.epochs.back().lambda;

  manifest.emit(opt.common.out, "training_log.csv",
                csv_of([&](std::ostream& os) { write_training_log(os, history); }));
  manifest.emit(opt.common.out, "summary.json", summary.dump(2) + "\n");
  manifest.finish(opt.common.out);
  std::cout << summary.dump(2) << "\n";
}

void cmd_solve_odes(const SolveOdesOptions& opt) {
  const Json doc = effective_config(opt.common);
  const SimConfig config = read_sim_config(doc);
  if (opt.theta != "true" && opt.theta != "initial") {
    throw ConfigError("--theta must be 'true' or 'initial', got '" + opt.theta + "'");
  }
  const MarketParams& theta = opt.theta == "true" ? config.theta_true : config.theta0;
  Json canonical = sim_config_json(config);
  canonical["solve_at"] = opt.theta;
  RunManifest manifest("solve-odes", canonical, config.seed);
  manifest.add_input(opt.common.config);

  const ValueCoefficients coeffs = solve_phcd(theta, config.q, config.grid, config.xi);
  manifest.emit(opt.common.out, "coefficients.csv",
                csv_of([&](std::ostream& os) { write_coefficients_csv(os, coeffs); }));
  manifest.finish(opt.common.out);
  for (std::size_t i = 0; i < coeffs.regimes(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    std::cout << "regime " << i + 1 << ": P(0)=" << format_double(coeffs.p(0, c))
              << " H(0)=" << format_double(coeffs.h(0, c)) << " C(0)=" << format_double(coeffs.c(0, c))
              << " D(0)=" << format_double(coeffs.d(0, c)) << "\n";
  }
}

void cmd_label_regimes(const LabelOptions& opt) {
  const RateUnit unit = parse_rate_unit(opt.rate_unit);
  if (opt.states < 1) throw ConfigError("--states must be >= 1");
  MarketSeries series = load_series(opt.data, unit);
  Json canonical;
  canonical["data"] = opt.data.filename().string();
  canonical["states"] = opt.states;
  canonical["rate_unit"] = opt.rate_unit;
  canonical["tol"] = opt.tol;
  canonical["max_iter"] = opt.max_iter;
  canonical["seed"] = opt.seed;
  RunManifest manifest("label-regimes", canonical, opt.seed);
  manifest.add_input(opt.data);

  const std::vector<double> returns = log_returns(series.prices);
  const HmmFit fit = fit_hmm(returns, opt.states, opt.tol, opt.max_iter, opt.seed);
  series.labels = labels_for_prices(viterbi(fit.model, returns));

  Json report = hmm_json(fit.model);
  report["log_likelihood"] = fit.log_likelihood.empty() ? 0.0 : fit.log_likelihood.back();
  report["iterations"] = fit.iterations;
  report["converged"] = fit.converged;
  report["warnings"] = fit.warnings;

  manifest.emit(opt.out, "labeled.csv", csv_of([&](std::ostream& os) { write_series_csv(os, series); }));
  manifest.emit(opt.out, "hmm.json", report.dump(2) + "\n");
  manifest.finish(opt.out);
  for (const std::string& w : fit.warnings) std::cerr << "warning: " << w << "\n";
  for (std::size_t s = 0; s < fit.model.n_states(); ++s) {
    std::cout << "state " << s + 1 << ": mean=" << format_double(fit.model.means[s])
              << " variance=" << format_double(fit.model.variances[s]) << "\n";
  }
  std::cout << "log-likelihood " << format_double(report["log_likelihood"].get<double>()) << " after "
            << fit.iterations << " iterations" << (fit.converged ? "" : " (not converged)") << "\n";
}

namespace {

Json window_json(std::size_t index, const RealWindow& w) {
  Json j;
  j["index"] = index + 1;
  j["start"] = format_date(w.start);
  j["end"] = format_date(w.end);
  if (!w.hmm.means.empty()) j["hmm"] = hmm_json(w.hmm);
  std::vector<std::string> dates;
  for (const Date& d : w.monthly.dates) dates.push_back(format_date(d));
  std::vector<std::size_t> regimes;
  for (std::size_t l : w.monthly.labels) regimes.push_back(l + 1);
  j["date"] = dates;
  j["price"] = w.monthly.prices;
  j["rate"] = w.monthly.rates;
  j["regime"] = regimes;
  return j;
}

RealWindow window_from(const Json& j) {
  try {
    RealWindow w;
    w.start = parse_date(j.at("start").get<std::string>());
    w.end = parse_date(j.at("end").get<std::string>());
    for (const Json& d : j.at("date")) w.monthly.dates.push_back(parse_date(d.get<std::string>()));
    w.monthly.prices = j.at("price").get<std::vector<double>>();
    w.monthly.rates = j.at("rate").get<std::vector<double>>();
    for (const Json& r : j.at("regime")) {
      const auto v = r.get<std::size_t>();
      if (v < 1) throw ConfigError("window regimes are 1-based");
      w.monthly.labels.push_back(v - 1);
    }
    w.monthly.validate();
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed window record: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("malformed window record: ") + e.what());
  }
}

}  // namespace

void cmd_train_real(const TrainOptions& opt) {
  const Json doc = effective_config(opt.common, opt.loss, opt.epochs);
  const RealSetup setup = read_real_setup(doc, opt.common.config.parent_path());
  RunManifest manifest("train-real", doc, setup.train.seed);
  manifest.add_input(opt.common.config);
  const MarketSeries series = load_series(setup.data, setup.rate_unit);
  manifest.add_input(setup.data);
  manifest.add_stream(stream_name(Stream::kAction));

  const std::vector<SeriesWindow> slices = rolling_windows(series, setup.windows);
  if (slices.empty()) throw ArgumentError("no window of the requested span fits the data");
  const std::size_t months = setup.train.grid.steps;
  std::vector<RealWindow> windows;
  windows.reserve(slices.size());
  for (const SeriesWindow& s : slices) {
    windows.push_back(prepare_window(s, setup.regimes, months, setup.train.seed));
  }
  std::vector<RealWindow> single = windows;
  for (RealWindow& w : single) {
    w.monthly.labels.assign(w.monthly.size(), 0);
    w.hmm = HmmModel{};
  }

  Json windows_doc;
  windows_doc["periods_per_year"] = setup.periods_per_year;
  windows_doc["regimes"] = setup.regimes;
  windows_doc["windows"] = Json::array();
  for (std::size_t w = 0; w < windows.size(); ++w) windows_doc["windows"].push_back(window_json(w, windows[w]));

  Json models_doc;
  models_doc["setup"] = {{"horizon", setup.train.grid.horizon},
                         {"periods_per_year", setup.periods_per_year},
                         {"substeps", setup.substeps},
                         {"xi", setup.train.xi},
                         {"x0", setup.train.x0},
                         {"z", setup.train.z}};
  models_doc["models"] = Json::array();
  for (LossKind loss : setup.losses) {
    for (ModelKind model : setup.models) {
      const RealTrainConfig cfg = setup.config_for(model, loss);
      const std::vector<RealWindow>& data = model == ModelKind::kEMV ? single : windows;
      std::cerr << "training " << model_kind_name(model) << "/" << loss_kind_name(loss) << " on "
                << data.size() << " windows\n";
      const std::vector<RealTrainResult> results = train_windows(data, cfg);
      Json entry;
      entry["model"] = model_kind_name(model);
      entry["training"] = loss_kind_name(loss);
      entry["windows"] = Json::array();
      for (std::size_t w = 0; w < results.size(); ++w) {
        const MarketParams& th = results[w].history.final_theta();
        entry["windows"].push_back({{"index", w + 1},
                                    {"start", format_date(data[w].start)},
                                    {"end", format_date(data[w].end)},
                                    {"sigma", th.sigma},
                                    {"rho", th.rho},
                                    {"r", th.r},
                                    {"generator", matrix_json(results[w].q.matrix())}});
        if (setup.write_logs) {
          const std::string name = "log_" + std::string(model_kind_name(model)) + "_" +
                                   std::string(loss_kind_name(loss)) + "_w" + two_digits(w + 1) + ".csv";
          manifest.emit(opt.common.out, name,
                        csv_of([&](std::ostream& os) { write_training_log(os, results[w].history); }));
        }
      }
      models_doc["models"].push_back(std::move(entry));
    }
  }
  manifest.emit(opt.common.out, "windows.json", windows_doc.dump(2) + "\n");
  manifest.emit(opt.common.out, "models.json", models_doc.dump(2) + "\n");
  manifest.finish(opt.common.out);
  std::cout << "trained " << models_doc["models"].size() << " model sets on " << windows.size()
            << " windows\n";
}

void cmd_backtest(const CommonOptions& opt) {
  const Json doc = effective_config(opt);
  const BacktestSetup setup = read_backtest_setup(doc, opt.config.parent_path());
  std::string absent;
  for (const fs::path& p : {setup.models, setup.windows}) {
    if (!fs::exists(p)) absent += (absent.empty() ? "" : ", ") + p.string();
  }
  if (!absent.empty()) throw MissingArtifactError("missing artifacts: " + absent);

  RunManifest manifest("backtest", doc, setup.seed);
  manifest.add_input(opt.config);
  manifest.add_input(setup.models);
  manifest.add_input(setup.windows);
  manifest.add_stream(stream_name(Stream::kBacktest));

  const Json models_doc = load_json(setup.models);
  const Json windows_doc = load_json(setup.windows);
  std::vector<RealWindow> windows;
  RealTrainConfig base;
  try {
    for (const Json& w : windows_doc.at("windows")) windows.push_back(window_from(w));
    const Json& s = models_doc.at("setup");
    base.grid = TimeGrid::make(s.at("horizon").get<double>(),
                               1.0 / s.at("periods_per_year").get<double>(),
                               s.at("substeps").get<std::size_t>());
    base.xi = s.at("xi").get<double>();
    base.x0 = s.at("x0").get<double>();
    base.z = s.at("z").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed training artifacts: ") + e.what());
  }
  if (windows.empty()) throw ConfigError("windows artifact holds no windows");
  const double rf = risk_free_annual(windows, base.grid.dt);

  std::vector<BacktestReport> reports;
  for (const Json& entry : models_doc.at("models")) {
    std::vector<TrainedModel> trained;
    BacktestSetting setting;
    try {
      setting.model = parse_model_kind(entry.at("model").get<std::string>());
      setting.learning = parse_loss_kind(entry.at("training").get<std::string>());
      for (const Json& w : entry.at("windows")) {
        TrainedModel m;
        m.theta.sigma = w.at("sigma").get<std::vector<double>>();
        m.theta.rho = w.at("rho").get<std::vector<double>>();
        m.theta.r = w.at("r").get<std::vector<double>>();
        m.q = GeneratorMatrix(matrix_from(w.at("generator"), "generator"));
        trained.push_back(std::move(m));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed model record: ") + e.what());
    }
    for (double ac : setup.constraints) {
      for (bool ss : setup.short_selling) {
        setting.action_constraint = ac;
        setting.short_selling = ss;
        reports.push_back(run_backtest(windows, trained, setting, base, setup.repeats, setup.seed, rf));
      }
    }
  }
  manifest.emit(opt.out, "report.csv", csv_of([&](std::ostream& os) { write_report_csv(os, reports); }));
  manifest.emit(opt.out, "report.json", report_json(reports));
  manifest.finish(opt.out);
  std::cout << "risk-free annual " << format_double(rf) << "\n";
  for (const BacktestReport& r : reports) {
    std::cout << loss_kind_name(r.setting.learning) << " AC=" << format_double(r.setting.action_constraint)
              << " SS=" << (r.setting.short_selling ? "yes" : "no") << " " << model_kind_name(r.setting.model)
              << " mean=" << format_double(r.mean_annual_return) << " vol=" << format_double(r.vol_annual_return)
              << " SR=" << format_double(r.sharpe) << "\n";
  }
}

}  // namespace emvrs::cli
