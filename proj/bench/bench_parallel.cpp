#include <benchmark/benchmark.h>

#include "rdslab/runner.hpp"

namespace {

rdslab::ExperimentConfig bench_config() {
  auto cfg = rdslab::default_experiment();
  cfg.sample_sizes = {100, 500};
  cfg.replications = 20;
  cfg.master_seed = 7;
  return cfg;
}

void BM_RunSerial(benchmark::State& state) {
  const auto cfg = bench_config();
  for (auto _ : state) {
    benchmark::DoNotOptimize(rdslab::run_experiment(cfg, rdslab::Execution::Serial));
  }
}

void BM_RunParallel(benchmark::State& state) {
  auto cfg = bench_config();
  cfg.workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(rdslab::run_experiment(cfg, rdslab::Execution::Parallel));
  }
  state.counters["workers"] = static_cast<double>(rdslab::resolve_workers(cfg.workers));
}

}  // namespace

BENCHMARK(BM_RunSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
