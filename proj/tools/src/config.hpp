#pragma once

// JSON configuration files for the command-line tool. Every key a reader does
// not consume is reported as a configuration error naming its dotted path.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "emvrs/backtest.hpp"
#include "emvrs/market_data.hpp"
#include "emvrs/real_trainer.hpp"
#include "emvrs/sim_trainer.hpp"
#include "json.hpp"

namespace emvrs::cli {

using Json = nlohmann::ordered_json;

/// Parses a config file; throws MissingArtifactError / ConfigError.
Json load_json(const std::filesystem::path& path);

/// Applies `a.b.c=value` overrides. The value is parsed as JSON when possible
/// and kept as a string otherwise.
void apply_override(Json& doc, const std::string& assignment);

/// Typed access to one JSON object that remembers which keys were read.
class ConfigReader {
 public:
  ConfigReader(const Json& node, std::string path);

  bool has(const std::string& key) const;
  ConfigReader child(const std::string& key);
  const Json& raw(const std::string& key);

  double number(const std::string& key, double fallback);
  std::size_t count(const std::string& key, std::size_t fallback);
  bool flag(const std::string& key, bool fallback);
  std::string text(const std::string& key, const std::string& fallback);
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback);
  /// A list of numbers, or one number repeated `n` times.
  std::vector<double> per_regime(const std::string& key, std::size_t n, const std::vector<double>& fallback);
  std::vector<std::vector<double>> rows(const std::string& key,
                                        const std::vector<std::vector<double>>& fallback);
  std::vector<std::string> texts(const std::string& key, const std::vector<std::string>& fallback);

  /// Throws ConfigError naming the first key never read.
  void finish() const;

 private:
  std::string where(const std::string& key) const;
  const Json* find(const std::string& key);

  const Json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

/// train-sim / solve-odes configuration; missing keys keep the toy defaults.
SimConfig read_sim_config(const Json& doc);
Json sim_config_json(const SimConfig& config);

struct RealSetup {
  std::filesystem::path data;
  RateUnit rate_unit = RateUnit::kDecimal;
  WindowSpec windows;
  std::size_t regimes = 2;
  std::size_t periods_per_year = 12;
  std::size_t substeps = 10;
  double hmm_tol = 1e-8;
  std::size_t hmm_max_iter = 500;
  std::vector<LossKind> losses{LossKind::kOC};
  std::vector<ModelKind> models{ModelKind::kEMVRS, ModelKind::kEMV};
  bool write_logs = true;
  RealTrainConfig train;  ///< grid horizon follows windows.span_years

  /// Config for one model kind: EMV collapses theta0 to its first regime.
  RealTrainConfig config_for(ModelKind model, LossKind loss) const;
};

/// Relative data paths are resolved against `base_dir`.
RealSetup read_real_setup(const Json& doc, const std::filesystem::path& base_dir);

struct BacktestSetup {
  std::filesystem::path models;
  std::filesystem::path windows;
  std::size_t repeats = 5;
  std::uint64_t seed = 20240101;
  std::vector<double> constraints{1.0, 1.5, 2.0, 3.0};
  std::vector<bool> short_selling{true, false};
};

BacktestSetup read_backtest_setup(const Json& doc, const std::filesystem::path& base_dir);

}  // namespace emvrs::cli
