#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "trendlens/agreement.hpp"

namespace {

using namespace trendlens;

void BM_CohenKappa(benchmark::State& state) {
  std::mt19937_64 rng(5);
  const std::vector<std::string> cats{"true", "false", "indeterminate"};
  std::vector<std::string> a, b;
  const size_t n = static_cast<size_t>(state.range(0));
  for (size_t i = 0; i < n; ++i) {
    a.push_back(cats[rng() % 3]);
    b.push_back(rng() % 2 ? a.back() : cats[rng() % 3]);
  }
  for (auto _ : state) {
    double kappa = cohen_kappa(a, b, cats);
    benchmark::DoNotOptimize(kappa);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CohenKappa)->Range(256, 65536);

void BM_StratifiedSample(benchmark::State& state) {
  std::mt19937_64 rng(6);
  std::vector<Assessment> assessments;
  for (int i = 0; i < state.range(0); ++i) {
    Assessment a;
    a.incident_id = "i" + std::to_string(i);
    auto verdict = [&]() {
      switch (rng() % 3) {
        case 0: return Match::True;
        case 1: return Match::False;
        default: return Match::Indeterminate;
      }
    };
    a.s_match = {verdict(), ""};
    a.r_match = {verdict(), ""};
    a.backend_id = "bench";
    assessments.push_back(std::move(a));
  }
  std::uint64_t seed = 0;
  for (auto _ : state) {
    StratifiedSample sample = stratified_sample(assessments, 25, seed++);
    benchmark::DoNotOptimize(sample);
  }
}
BENCHMARK(BM_StratifiedSample)->Range(256, 16384);

}  // namespace
