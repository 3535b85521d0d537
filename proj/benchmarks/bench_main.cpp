#include <benchmark/benchmark.h>

#include "emvrs/market_data.hpp"
#include "emvrs/sim_trainer.hpp"

using namespace emvrs;

namespace {

void BM_SolvePhcd(benchmark::State& state) {
  const SimConfig cfg = table2_config();
  const TimeGrid grid = TimeGrid::make(1.0, 0.1, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_phcd(cfg.theta0, cfg.q, grid, cfg.xi));
}
BENCHMARK(BM_SolvePhcd)->Arg(10)->Arg(100);

void BM_SimEpoch(benchmark::State& state) {
  SimConfig cfg = table1_config(state.range(0) == 0 ? LossKind::kOC : LossKind::kTD);
  std::size_t n = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_sim_epoch(cfg, cfg.theta0, n++, std::nullopt));
}
BENCHMARK(BM_SimEpoch)->Arg(0)->Arg(1);

HmmModel two_state() {
  HmmModel m;
  m.means = {0.0005, -0.001};
  m.variances = {1e-4, 4e-4};
  m.trans.resize(2, 2);
  m.trans << 0.99, 0.01, 0.03, 0.97;
  m.init = Vector::Constant(2, 0.5);
  return m;
}

void BM_Viterbi(benchmark::State& state) {
  Rng rng = make_rng(1, Stream::kHmmSynthetic);
  const HmmModel m = two_state();
  const std::vector<double> x = sample_hmm(m, static_cast<std::size_t>(state.range(0)), rng).returns;
  for (auto _ : state) benchmark::DoNotOptimize(viterbi(m, x));
}
BENCHMARK(BM_Viterbi)->Arg(2520);

void BM_FitHmm(benchmark::State& state) {
  Rng rng = make_rng(2, Stream::kHmmSynthetic);
  const std::vector<double> x = sample_hmm(two_state(), 2520, rng).returns;
  for (auto _ : state) benchmark::DoNotOptimize(fit_hmm(x, 2));
}
BENCHMARK(BM_FitHmm)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
