#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "emvrs/losses.hpp"
#include "emvrs/market_params.hpp"
#include "emvrs/real_trainer.hpp"
#include "emvrs/regime_markov.hpp"

namespace emvrs {

enum class ModelKind { kEMVRS, kEMV };

std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct BacktestSetting {
  double action_constraint = 3.0;
  bool short_selling = true;
  ModelKind model = ModelKind::kEMVRS;
  LossKind learning = LossKind::kOC;

  void validate() const;
};

/// Trained parameters of one window, rates included.
struct TrainedModel {
  MarketParams theta;
  GeneratorMatrix q;
};

struct AnnualStats {
  double mean = 0.0;
  double vol = 0.0;          ///< population standard deviation
  std::size_t excluded = 0;  ///< non-positive terminal values left out
};

/// Per trajectory X_T^(1/T) - 1, then mean and population standard deviation.
AnnualStats annualize(const std::vector<double>& terminal_values, double horizon);

/// (mean - rf) / vol. Throws ArgumentError when vol <= 0.
double sharpe(double mean_annual, double vol_annual, double rf_annual);

/// Bond-only terminal value prod(1 + r_k dt) averaged over windows, annualised.
double risk_free_annual(const std::vector<RealWindow>& windows, double dt);

struct BacktestReport {
  BacktestSetting setting;
  double mean_annual_return = 0.0;
  double vol_annual_return = 0.0;
  double rf_annual = 0.0;
  /// Zero when mean equals rf; NaN when volatility vanishes otherwise.
  double sharpe = 0.0;
  std::size_t n_trajectories = 0;
  std::size_t excluded = 0;
  std::vector<std::vector<double>> terminal_values;  ///< [window][repeat]
};

/// Trades every window `repeats` times with the window's trained policy. Cell
/// (w, r) draws from its own stream keyed only by (seed, w, r), so settings that
/// differ only in their constraint see the same raw draws.
BacktestReport run_backtest(const std::vector<RealWindow>& windows,
                            const std::vector<TrainedModel>& models, const BacktestSetting& setting,
                            const RealTrainConfig& base, std::size_t repeats, std::uint64_t seed,
                            double rf_annual);

/// Columns: training, AC, SS, model, mean, volatility, SR.
void write_report_csv(std::ostream& os, const std::vector<BacktestReport>& reports);
std::string report_json(const std::vector<BacktestReport>& reports);

}  // namespace emvrs
