#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace emvrs::cli {

struct CommonOptions {
  std::filesystem::path config;
  std::filesystem::path out = ".";
  std::vector<std::string> overrides;  ///< key=value, applied before flags below
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

struct TrainOptions {
  CommonOptions common;
  std::optional<std::string> loss;
  std::optional<std::size_t> epochs;
};

struct SolveOdesOptions {
  CommonOptions common;
  std::string theta = "true";  ///< "true" or "initial"
};

struct LabelOptions {
  std::filesystem::path data;
  std::filesystem::path out = ".";
  std::size_t states = 2;
  std::string rate_unit = "decimal";
  std::uint64_t seed = 20240101;
  double tol = 1e-8;
  std::size_t max_iter = 500;
};

// Each command throws the library's error types; main() maps them to exit codes.
void cmd_train_sim(const TrainOptions& opt);
void cmd_solve_odes(const SolveOdesOptions& opt);
void cmd_label_regimes(const LabelOptions& opt);
void cmd_train_real(const TrainOptions& opt);
void cmd_backtest(const CommonOptions& opt);

/// Config file with overrides and flag values folded in.
Json effective_config(const CommonOptions& opt, const std::optional<std::string>& loss = std::nullopt,
                      const std::optional<std::size_t>& epochs = std::nullopt);

/// Exit status for an exception escaping a command.
int exit_code_for(const std::exception& e);

}  // namespace emvrs::cli
