#include "config.hpp"

#include <sstream>

#include "emvrs/error.hpp"
#include "emvrs/io.hpp"

namespace emvrs::cli {

Json load_json(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError("missing file: " + path.string());
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_override(Json& doc, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  Json parsed;
  try {
    parsed = Json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    parsed = value;
  }
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = parsed;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = Json::object();
    start = dot + 1;
  }
}

ConfigReader::ConfigReader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
  if (!node_.is_object()) {
    throw ConfigError((path_.empty() ? std::string("config") : path_) + " must be an object");
  }
}

std::string ConfigReader::where(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

bool ConfigReader::has(const std::string& key) const { return node_.contains(key); }

const Json* ConfigReader::find(const std::string& key) {
  seen_.insert(key);
  const auto it = node_.find(key);
  return it == node_.end() ? nullptr : &*it;
}

ConfigReader ConfigReader::child(const std::string& key) {
  static const Json kEmpty = Json::object();
  const Json* j = find(key);
  return ConfigReader(j == nullptr ? kEmpty : *j, where(key));
}

const Json& ConfigReader::raw(const std::string& key) {
  const Json* j = find(key);
  if (j == nullptr) throw ConfigError("missing key: " + where(key));
  return *j;
}

double ConfigReader::number(const std::string& key, double fallback) {
  const Json* j = find(key);
  if (j == nullptr) return fallback;
  if (!j->is_number()) throw ConfigError(where(key) + " must be a number");
  return j->get<double>();
}

std::size_t ConfigReader::count(const std::string& key, std::size_t fallback) {
  const Json* j = find(key);
  if (j == nullptr) return fallback;
  if (!j->is_number_unsigned()) throw ConfigError(where(key) + " must be a non-negative integer");
  return j->get<std::size_t>();
}

bool ConfigReader::flag(const std::string& key, bool fallback) {
  const Json* j = find(key);
  if (j == nullptr) return fallback;
  if (!j->is_boolean()) throw ConfigError(where(key) + " must be true or false");
  return j->get<bool>();
}

std::string ConfigReader::text(const std::string& key, const std::string& fallback) {
  const Json* j = find(key);
  if (j == nullptr) return fallback;
  if (!j->is_string()) throw ConfigError(where(key) + " must be a string");
  return j->get<std::string>();
}

std::vector<double> ConfigReader::numbers(const std::string& key, const std::vector<double>& fallback) {
  const Json* j = find(key);
  if (j == nullptr) return fallback;
  if (!j->is_array()) throw ConfigError(where(key) + " must be an array of numbers");
  std::vector<double> out;
  for (const Json& v : *j) {
    if (!v.is_number()) throw ConfigError(where(key) + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<double> ConfigReader::per_regime(const std::string& key, std::size_t n,
                                             const std::vector<double>& fallback) {
  const Json* j = find(key);
  if (j == nullptr) return fallback;
  if (j->is_number()) return std::vector<double>(n, j->get<double>());
  seen_.erase(key);
  std::vector<double> out = numbers(key, fallback);
  if (out.size() != n) {
    throw ConfigError(where(key) + " needs " + std::to_string(n) + " entries, got " +
                      std::to_string(out.size()));
  }
  return out;
}

std::vector<std::vector<double>> ConfigReader::rows(const std::string& key,
                                                    const std::vector<std::vector<double>>& fallback) {
  const Json* j = find(key);
  if (j == nullptr) return fallback;
  if (!j->is_array()) throw ConfigError(where(key) + " must be an array of rows");
  std::vector<std::vector<double>> out;
  for (const Json& row : *j) {
    if (!row.is_array()) throw ConfigError(where(key) + " must be an array of rows");
    std::vector<double>& r = out.emplace_back();
    for (const Json& v : row) {
      if (!v.is_number()) throw ConfigError(where(key) + " entries must be numbers");
      r.push_back(v.get<double>());
    }
  }
  return out;
}

std::vector<std::string> ConfigReader::texts(const std::string& key,
                                             const std::vector<std::string>& fallback) {
  const Json* j = find(key);
  if (j == nullptr) return fallback;
  if (j->is_string()) return {j->get<std::string>()};
  if (!j->is_array()) throw ConfigError(where(key) + " must be a string or an array of strings");
  std::vector<std::string> out;
  for (const Json& v : *j) {
    if (!v.is_string()) throw ConfigError(where(key) + " must contain strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

void ConfigReader::finish() const {
  for (auto it = node_.begin(); it != node_.end(); ++it) {
    if (!seen_.contains(it.key())) throw ConfigError("unknown config key: " + where(it.key()));
  }
}

namespace {

Bounds read_bounds(ConfigReader& r, const std::string& key, const Bounds& fallback) {
  const std::vector<double> v = r.numbers(key, {fallback.lo, fallback.hi});
  if (v.size() != 2 || !(v[0] < v[1])) throw ConfigError("bounds." + key + " must be [lo, hi] with lo < hi");
  return {v[0], v[1]};
}

RateSchedule parse_schedule(const std::string& s) {
  if (s == "linear") return RateSchedule::kLinear;
  if (s == "geometric") return RateSchedule::kGeometric;
  if (s == "harmonic") return RateSchedule::kHarmonic;
  throw ConfigError("learning.schedule must be linear, geometric or harmonic, got '" + s + "'");
}

std::string schedule_name(RateSchedule s) {
  switch (s) {
    case RateSchedule::kLinear: return "linear";
    case RateSchedule::kGeometric: return "geometric";
    case RateSchedule::kHarmonic: return "harmonic";
  }
  return "linear";
}

void read_learning(ConfigReader& r, LearnSettings& s, std::size_t n) {
  s.eta = r.per_regime("eta", n, s.eta);
  s.eta_floor = r.number("eta_floor", s.eta_floor);
  s.eps = r.per_regime("eps", n, s.eps);
  s.n_epochs = r.count("epochs", s.n_epochs);
  s.schedule = parse_schedule(r.text("schedule", schedule_name(s.schedule)));
  s.decay_power = r.number("decay_power", s.decay_power);
  if (!(s.decay_power > 0.0)) throw ConfigError("learning.decay_power must be > 0");
}

Json learning_json(const LearnSettings& s, LossKind loss) {
  Json j;
  j["loss"] = loss_kind_name(loss);
  j["eta"] = s.eta;
  j["eta_floor"] = s.eta_floor;
  j["eps"] = s.eps;
  j["epochs"] = s.n_epochs;
  j["schedule"] = schedule_name(s.schedule);
  j["decay_power"] = s.decay_power;
  return j;
}

void read_theta(ConfigReader r, MarketParams& p, std::size_t l) {
  p.sigma = r.per_regime("sigma", l, p.sigma);
  p.rho = r.per_regime("rho", l, p.rho);
  r.finish();
}

}  // namespace

SimConfig read_sim_config(const Json& doc) {
  ConfigReader root(doc, "");
  ConfigReader learning = root.child("learning");
  const LossKind loss = parse_loss_kind(learning.text("loss", "oc"));
  SimConfig c = table1_config(loss);

  ConfigReader grid = root.child("grid");
  const double horizon = grid.number("horizon", c.grid.horizon);
  const double dt = grid.number("dt", c.grid.dt);
  const std::size_t substeps = grid.count("substeps", c.grid.substeps);
  grid.finish();
  try {
    c.grid = TimeGrid::make(horizon, dt, substeps);
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }

  if (root.has("generator")) {
    try {
      c.q = GeneratorMatrix::from_rows(root.rows("generator", {}));
    } catch (const ArgumentError& e) {
      throw ConfigError(std::string("generator: ") + e.what());
    }
  }
  const std::size_t l = c.q.size();
  c.xi = root.number("xi", c.xi);
  c.x0 = root.number("x0", c.x0);
  c.z = root.number("z", c.z);

  if (l != c.theta_true.regimes()) {
    c.theta_true.sigma.assign(l, 0.2);
    c.theta_true.rho.assign(l, 1.0);
    c.theta_true.r.assign(l, 0.0);
    c.theta0 = c.theta_true;
    c.settings.eta.assign(2 * l, 1e3);
    c.settings.eps.assign(2 * l, 1e-3);
  }
  const std::vector<double> rates = root.per_regime("rates", l, c.theta_true.r);
  read_theta(root.child("theta_true"), c.theta_true, l);
  read_theta(root.child("theta0"), c.theta0, l);
  c.theta_true.r = rates;
  c.theta0.r = rates;

  ConfigReader bounds = root.child("bounds");
  const Bounds sb = read_bounds(bounds, "sigma", c.theta0.sigma_bounds);
  const Bounds rb = read_bounds(bounds, "rho", c.theta0.rho_bounds);
  bounds.finish();
  for (MarketParams* p : {&c.theta_true, &c.theta0}) {
    p->sigma_bounds = sb;
    p->rho_bounds = rb;
  }

  read_learning(learning, c.settings, 2 * l);
  learning.finish();

  const std::string timing = root.text("lambda_timing", "pre_sim");
  if (timing == "pre_sim") c.lambda_timing = LambdaTiming::kPreSim;
  else if (timing == "post_sim") c.lambda_timing = LambdaTiming::kPostSim;
  else throw ConfigError("lambda_timing must be pre_sim or post_sim, got '" + timing + "'");

  c.seed = static_cast<std::uint64_t>(root.count("seed", c.seed));
  c.threads = static_cast<unsigned>(root.count("threads", c.threads));
  root.finish();
  try {
    c.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

Json sim_config_json(const SimConfig& c) {
  Json j;
  j["grid"] = {{"horizon", c.grid.horizon}, {"dt", c.grid.dt}, {"substeps", c.grid.substeps}};
  Json q = Json::array();
  for (Eigen::Index i = 0; i < c.q.matrix().rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < c.q.matrix().cols(); ++k) row.push_back(c.q.matrix()(i, k));
    q.push_back(row);
  }
  j["generator"] = q;
  j["xi"] = c.xi;
  j["x0"] = c.x0;
  j["z"] = c.z;
  j["rates"] = c.theta_true.r;
  j["theta_true"] = {{"sigma", c.theta_true.sigma}, {"rho", c.theta_true.rho}};
  j["theta0"] = {{"sigma", c.theta0.sigma}, {"rho", c.theta0.rho}};
  j["bounds"] = {{"sigma", {c.theta0.sigma_bounds.lo, c.theta0.sigma_bounds.hi}},
                 {"rho", {c.theta0.rho_bounds.lo, c.theta0.rho_bounds.hi}}};
  j["learning"] = learning_json(c.settings, c.loss);
  j["lambda_timing"] = c.lambda_timing == LambdaTiming::kPostSim ? "post_sim" : "pre_sim";
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j;
}

RealTrainConfig RealSetup::config_for(ModelKind model, LossKind loss) const {
  RealTrainConfig c = train;
  c.loss = loss;
  if (model == ModelKind::kEMV) {
    c.theta0.sigma.resize(1);
    c.theta0.rho.resize(1);
    c.theta0.r.clear();
    c.settings.eta = {train.settings.eta[0], train.settings.eta[train.regimes()]};
    c.settings.eps = {train.settings.eps[0], train.settings.eps[train.regimes()]};
  }
  return c;
}

RealSetup read_real_setup(const Json& doc, const std::filesystem::path& base_dir) {
  ConfigReader root(doc, "");
  RealSetup s;
  const std::filesystem::path data = root.text("data", "");
  if (data.empty()) throw ConfigError("missing key: data");
  s.data = data.is_absolute() ? data : base_dir / data;
  s.rate_unit = parse_rate_unit(root.text("rate_unit", "decimal"));

  ConfigReader win = root.child("windows");
  s.windows.span_years = win.number("span_years", s.windows.span_years);
  const double step = win.number("step_months", s.windows.step_months);
  if (step != static_cast<int>(step) || step <= 0) throw ConfigError("windows.step_months must be a positive integer");
  s.windows.step_months = static_cast<int>(step);
  s.windows.count = win.count("count", s.windows.count);
  const std::string start = win.text("start", "");
  if (!start.empty()) {
    try {
      s.windows.start = parse_date(start);
    } catch (const ArgumentError& e) {
      throw ConfigError(std::string("windows.start: ") + e.what());
    }
  }
  win.finish();

  s.regimes = root.count("regimes", s.regimes);
  if (s.regimes < 1) throw ConfigError("regimes must be >= 1");
  ConfigReader grid = root.child("grid");
  s.periods_per_year = grid.count("periods_per_year", s.periods_per_year);
  s.substeps = grid.count("substeps", s.substeps);
  grid.finish();
  if (s.periods_per_year < 1) throw ConfigError("grid.periods_per_year must be >= 1");

  const double months = s.windows.span_years * static_cast<double>(s.periods_per_year);
  if (std::abs(months - std::round(months)) > 1e-9) {
    throw ConfigError("windows.span_years must cover a whole number of periods");
  }
  s.train = table3_config(LossKind::kOC, s.regimes);
  try {
    s.train.grid = TimeGrid::make(s.windows.span_years, 1.0 / static_cast<double>(s.periods_per_year),
                                  s.substeps);
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  s.train.xi = root.number("xi", s.train.xi);
  s.train.x0 = root.number("x0", s.train.x0);
  s.train.z = root.number("z", s.train.z);
  s.train.constraint.multiple = root.number("action_constraint", s.train.constraint.multiple);
  s.train.constraint.short_selling = root.flag("short_selling", s.train.constraint.short_selling);
  read_theta(root.child("theta0"), s.train.theta0, s.regimes);

  ConfigReader bounds = root.child("bounds");
  s.train.theta0.sigma_bounds = read_bounds(bounds, "sigma", s.train.theta0.sigma_bounds);
  s.train.theta0.rho_bounds = read_bounds(bounds, "rho", s.train.theta0.rho_bounds);
  bounds.finish();

  ConfigReader learning = root.child("learning");
  s.losses.clear();
  for (const std::string& l : learning.texts("loss", {"oc"})) s.losses.push_back(parse_loss_kind(l));
  read_learning(learning, s.train.settings, 2 * s.regimes);
  learning.finish();

  s.models.clear();
  for (const std::string& m : root.texts("models", {"EMVRS", "EMV"})) s.models.push_back(parse_model_kind(m));

  ConfigReader hmm = root.child("hmm");
  s.hmm_tol = hmm.number("tol", s.hmm_tol);
  s.hmm_max_iter = hmm.count("max_iter", s.hmm_max_iter);
  hmm.finish();

  s.write_logs = root.flag("write_logs", s.write_logs);
  s.train.seed = static_cast<std::uint64_t>(root.count("seed", s.train.seed));
  s.train.threads = static_cast<unsigned>(root.count("threads", s.train.threads));
  root.finish();

  try {
    s.train.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  return s;
}

BacktestSetup read_backtest_setup(const Json& doc, const std::filesystem::path& base_dir) {
  ConfigReader root(doc, "");
  BacktestSetup s;
  const auto resolve = [&](const std::string& key, const std::string& fallback) {
    const std::filesystem::path p = root.text(key, fallback);
    return p.is_absolute() ? p : base_dir / p;
  };
  s.models = resolve("models", "models.json");
  s.windows = resolve("windows", "windows.json");
  s.repeats = root.count("repeats", s.repeats);
  if (s.repeats < 1) throw ConfigError("repeats must be >= 1");
  s.seed = static_cast<std::uint64_t>(root.count("seed", s.seed));
  s.constraints = root.numbers("constraints", s.constraints);
  if (s.constraints.empty()) throw ConfigError("constraints must not be empty");
  for (double c : s.constraints)
    if (!(c > 0.0)) throw ConfigError("constraints must be > 0");
  if (root.has("short_selling")) {
    const Json& ss = root.raw("short_selling");
    s.short_selling.clear();
    if (ss.is_boolean()) {
      s.short_selling.push_back(ss.get<bool>());
    } else if (ss.is_array() && !ss.empty()) {
      for (const Json& v : ss) {
        if (!v.is_boolean()) throw ConfigError("short_selling must contain true/false");
        s.short_selling.push_back(v.get<bool>());
      }
    } else {
      throw ConfigError("short_selling must be a flag or a non-empty array of flags");
    }
  }
  root.finish();
  return s;
}

}  // namespace emvrs::cli
