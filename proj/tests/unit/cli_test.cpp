#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "doctest.h"
#include "emvrs/error.hpp"
#include "emvrs/io.hpp"
#include "emvrs/market_data.hpp"

using namespace emvrs;
using namespace emvrs::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("emvrs_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(EMVRS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

const fs::path kConfigs = fs::path(EMVRS_SOURCE_DIR) / "tools" / "configs";

}  // namespace

TEST_CASE("unknown config keys are rejected with their path") {
  Json doc = Json::parse(R"({"learning": {"epochs": 5, "epoch": 7}})");
  try {
    read_sim_config(doc);
    FAIL("expected a configuration error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("learning.epoch") != std::string::npos);
  }
  CHECK_THROWS_AS(read_sim_config(Json::parse(R"({"colour": 1})")), ConfigError);
  CHECK_THROWS_AS(read_sim_config(Json::parse(R"({"xi": "half"})")), ConfigError);
}

TEST_CASE("sim config reader") {
  const SimConfig c = read_sim_config(load_json(kConfigs / "table1_oc.json"));
  CHECK(c.settings.n_epochs == 10000);
  CHECK(c.theta_true.rho == std::vector<double>{1.0, -0.5});
  CHECK(c.loss == LossKind::kOC);
  CHECK(c.settings.schedule == RateSchedule::kLinear);
  const SimConfig t2 = read_sim_config(load_json(kConfigs / "table2_oc.json"));
  CHECK(t2.theta_true.r == std::vector<double>{0.01, 0.05});
  CHECK(read_sim_config(Json::object()).settings.eta == table1_config().settings.eta);
  CHECK_THROWS_AS(load_json("/nonexistent/config.json"), MissingArtifactError);
  CHECK_THROWS_AS(read_sim_config(Json::parse(R"({"theta_true": {"sigma": [0.2]}})")), ConfigError);
}

TEST_CASE("overrides") {
  Json doc = Json::parse(R"({"learning": {"epochs": 5}})");
  apply_override(doc, "learning.epochs=9");
  apply_override(doc, "learning.loss=td");
  apply_override(doc, "theta0.rho=[0.2,0.2]");
  CHECK(doc["learning"]["epochs"] == 9);
  CHECK(doc["learning"]["loss"] == "td");
  CHECK(doc["theta0"]["rho"].size() == 2);
  CHECK_THROWS_AS(apply_override(doc, "no_equals_sign"), ConfigError);
}

TEST_CASE("real and backtest setup readers") {
  const RealSetup s = read_real_setup(load_json(kConfigs / "real_protocol.json"), kConfigs);
  CHECK(s.windows.count == 24);
  CHECK(s.train.grid.steps == 120);
  CHECK(s.rate_unit == RateUnit::kPercent);
  const RealTrainConfig emv = s.config_for(ModelKind::kEMV, LossKind::kTD);
  CHECK(emv.regimes() == 1);
  CHECK(emv.loss == LossKind::kTD);
  const BacktestSetup b = read_backtest_setup(load_json(kConfigs / "backtest.json"), kConfigs);
  CHECK(b.repeats == 5);
  CHECK(b.models == kConfigs / "models.json");
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("exit");
  CHECK(run("--help") == 0);
  CHECK(run("") == 2);
  CHECK(run("train-sim") == 2);
  CHECK(run("train-sim -c " + (dir / "absent.json").string()) == 3);
  write(dir / "bad.json", R"({"learning": {"epochs": 2, "typo": 1}})");
  CHECK(run("train-sim -c " + (dir / "bad.json").string() + " -o " + dir.string()) == 2);
  write(dir / "broken.json", "{ not json");
  CHECK(run("solve-odes -c " + (dir / "broken.json").string() + " -o " + dir.string()) == 2);
  CHECK(run("label-regimes -d " + (dir / "absent.csv").string() + " -o " + dir.string()) == 3);
  write(dir / "dup.csv", "date,price,rate\n2020-01-02,100,0.01\n2020-01-02,101,0.01\n");
  CHECK(run("label-regimes -d " + (dir / "dup.csv").string() + " -o " + dir.string()) == 2);
  write(dir / "typo.json", R"({"repeat": 5})");
  CHECK(run("backtest -c " + (dir / "typo.json").string() + " -o " + dir.string()) == 2);
  write(dir / "bt.json", R"({"models": "m.json", "windows": "w.json"})");
  CHECK(run("backtest -c " + (dir / "bt.json").string() + " -o " + dir.string()) == 3);
  // Stiff generator on a one-substep grid drives P negative.
  write(dir / "stiff.json",
        R"({"grid": {"substeps": 1}, "generator": [[-100, 100], [100, -100]],)"
        R"( "theta_true": {"sigma": [0.2, 0.2], "rho": [2.0, 0.0]}})");
  CHECK(run("solve-odes -c " + (dir / "stiff.json").string() + " -o " + dir.string()) == 4);
}

TEST_CASE("train-sim and solve-odes artifacts are reproducible") {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  const std::string cfg = (kConfigs / "table1_oc.json").string();
  REQUIRE(run("train-sim -c " + cfg + " --epochs 20 -o " + a.string()) == 0);
  REQUIRE(run("train-sim -c " + cfg + " --epochs 20 -o " + b.string()) == 0);
  CHECK(read_file(a / "training_log.csv") == read_file(b / "training_log.csv"));
  CHECK(read_file(a / "summary.json") == read_file(b / "summary.json"));
  CHECK(fs::exists(a / "manifest.json"));
  const Json summary = Json::parse(read_file(a / "summary.json"));
  CHECK(summary["epochs"] == 20);
  const Json manifest = Json::parse(read_file(a / "manifest.json"));
  CHECK(manifest["seed"] == 20240101);
  CHECK(manifest["outputs"].size() >= 2);

  REQUIRE(run("solve-odes -c " + cfg + " -o " + a.string()) == 0);
  REQUIRE(run("solve-odes -c " + cfg + " -o " + b.string()) == 0);
  CHECK(read_file(a / "coefficients.csv") == read_file(b / "coefficients.csv"));

  const fs::path c = scratch("sim_c");
  REQUIRE(run("train-sim -c " + cfg + " --epochs 20 --seed 7 -o " + c.string()) == 0);
  CHECK(read_file(a / "training_log.csv") != read_file(c / "training_log.csv"));
}

TEST_CASE("label-regimes output") {
  const fs::path dir = scratch("label");
  std::ostringstream csv;
  csv << "date,price,rate\n";
  double price = 100.0;
  Rng rng = make_rng(3, Stream::kHmmSynthetic);
  std::chrono::sys_days day = std::chrono::sys_days(Date{std::chrono::year{2001}, std::chrono::month{1}, std::chrono::day{1}});
  for (int k = 0; k < 300; ++k) {
    price *= std::exp((k / 50) % 2 == 0 ? 0.004 + 0.004 * standard_normal(rng) : -0.004 + 0.02 * standard_normal(rng));
    csv << format_date(Date(day)) << ',' << format_double(price) << ",0.02\n";
    day += std::chrono::days(1);
  }
  write(dir / "daily.csv", csv.str());
  REQUIRE(run("label-regimes -d " + (dir / "daily.csv").string() + " -o " + dir.string()) == 0);
  const MarketSeries labelled = load_series(dir / "labeled.csv");
  CHECK(labelled.size() == 300);
  CHECK(labelled.labels.size() == 300);
  const Json hmm = Json::parse(read_file(dir / "hmm.json"));
  CHECK(hmm["means"].size() == 2);
  CHECK(hmm["means"][0].get<double>() >= hmm["means"][1].get<double>());
}
