#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "manifest.hpp"

namespace {

void add_common(CLI::App* app, emvrs::cli::CommonOptions& opt) {
  app->add_option("-c,--config", opt.config, "JSON configuration file")->required();
  app->add_option("-o,--out", opt.out, "output directory")->capture_default_str();
  app->add_option("--set", opt.overrides, "override a config key, e.g. learning.epochs=500");
  app->add_option("--seed", opt.seed, "master seed");
  app->add_option("--threads", opt.threads, "worker cap for the perturbed ODE solves");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace emvrs::cli;
  CLI::App app{"Exploratory mean-variance portfolio learning with regime switching"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  TrainOptions sim;
  CLI::App* train_sim = app.add_subcommand("train-sim", "train on a simulated regime-switching market");
  add_common(train_sim, sim.common);
  train_sim->add_option("--loss", sim.loss, "td or oc");
  train_sim->add_option("--epochs", sim.epochs, "epoch budget");

  TrainOptions real;
  CLI::App* train_real = app.add_subcommand("train-real", "train on rolling windows of observed prices");
  add_common(train_real, real.common);
  train_real->add_option("--loss", real.loss, "td or oc");
  train_real->add_option("--epochs", real.epochs, "epoch budget per window");

  LabelOptions label;
  CLI::App* label_cmd = app.add_subcommand("label-regimes", "fit a Gaussian HMM and label each row");
  label_cmd->add_option("-d,--data", label.data, "CSV with date,price[,rate]")->required();
  label_cmd->add_option("-o,--out", label.out, "output directory")->capture_default_str();
  label_cmd->add_option("--states", label.states, "number of hidden states")->capture_default_str();
  label_cmd->add_option("--rate-unit", label.rate_unit, "decimal or percent")->capture_default_str();
  label_cmd->add_option("--seed", label.seed, "seed for empty-cluster reseeding")->capture_default_str();
  label_cmd->add_option("--tol", label.tol, "relative log-likelihood tolerance")->capture_default_str();
  label_cmd->add_option("--max-iter", label.max_iter, "EM iteration cap")->capture_default_str();

  CommonOptions bt;
  CLI::App* backtest = app.add_subcommand("backtest", "trade trained policies over the stored windows");
  add_common(backtest, bt);

  SolveOdesOptions odes;
  CLI::App* solve = app.add_subcommand("solve-odes", "dump the value-function coefficients");
  add_common(solve, odes.common);
  solve->add_option("--theta", odes.theta, "true or initial")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*train_sim) cmd_train_sim(sim);
    else if (*train_real) cmd_train_real(real);
    else if (*label_cmd) cmd_label_regimes(label);
    else if (*backtest) cmd_backtest(bt);
    else if (*solve) cmd_solve_odes(odes);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}
