#include <benchmark/benchmark.h>

#include <random>

#include "adrsplit/admm.hpp"
#include "adrsplit/experiment.hpp"
#include "adrsplit/functions.hpp"
#include "adrsplit/linalg.hpp"

using namespace adrsplit;

static void BM_OpNormDifference(benchmark::State& state) {
  LinearMap d = difference_matrix(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(op_norm(d).value);
}
BENCHMARK(BM_OpNormDifference)->Arg(300)->Arg(1500)->Unit(benchmark::kMillisecond);

static void BM_McpProx(benchmark::State& state) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<double> a(4096);
  for (auto& v : a) v = u(gen);
  for (auto _ : state) {
    double s = 0.0;
    for (double v : a) s += prox_mcp_scalar(v, 1.0, 4.0, 0.5);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(a.size()));
}
BENCHMARK(BM_McpProx);

static void BM_DenoiseIterations(benchmark::State& state) {
  ExperimentConfig cfg;
  cfg.n = state.range(0);
  DenoiseSetup setup = prepare_denoise(cfg, make_denoise_layout(cfg.n, cfg.N), 1);
  AdmmInit init = zero_init(setup.problem);
  AdmmOptions opts;
  opts.max_iter = 100;
  opts.run_to_max = true;
  opts.timing = false;
  for (auto _ : state) {
    auto r = admm_special_run(setup.problem, setup.steps.gamma, setup.steps.delta, init, opts);
    benchmark::DoNotOptimize(r.iterations);
  }
  state.SetItemsProcessed(state.iterations() * opts.max_iter);
}
BENCHMARK(BM_DenoiseIterations)->Arg(500)->Arg(3000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
