#include <benchmark/benchmark.h>

#include "trendlens/synth.hpp"

namespace {

using namespace trendlens;
using namespace trendlens::synth;

GroundTruthConfig config_with_mean(double mean_per_period) {
  GroundTruthConfig c;
  c.periods = {Period{Date(2024, 1, 1), Date(2024, 12, 31)},
               Period{Date(2025, 1, 1), Date(2025, 12, 31)}};
  c.exposure = {mean_per_period * 100.0, mean_per_period * 100.0};
  c.hazard = {0.01, 0.01};
  c.funnel = {FunnelStages{0.9, 0.9, 0.9, 0.9, 0.9, 0.9}};
  c.seed = 1;
  return c;
}

void BM_Generate(benchmark::State& state) {
  GroundTruthConfig c = config_with_mean(static_cast<double>(state.range(0)));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    c.seed = seed++;
    SyntheticStream stream = generate(c);
    benchmark::DoNotOptimize(stream);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 2);
}
BENCHMARK(BM_Generate)->Range(16, 4096);

void BM_RecoveryRun(benchmark::State& state) {
  GroundTruthConfig c = config_with_mean(64);
  PipelineSettings settings;
  for (auto _ : state) {
    RecoveryReport report = recovery_experiment(c, settings, 1);
    benchmark::DoNotOptimize(report);
    c.seed += 1;
  }
}
BENCHMARK(BM_RecoveryRun);

}  // namespace
