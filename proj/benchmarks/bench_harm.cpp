#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "trendlens/harm.hpp"

namespace {

using namespace trendlens;

std::vector<Assessment> make_assessments(size_t n) {
  std::mt19937_64 rng(7);
  std::vector<Assessment> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    Assessment a;
    a.incident_id = "i" + std::to_string(i);
    auto verdict = [&]() {
      switch (rng() % 3) {
        case 0: return Match::True;
        case 1: return Match::False;
        default: return Match::Indeterminate;
      }
    };
    a.s_match = {verdict(), "r"};
    a.r_match = {verdict(), "r"};
    a.harm_lower = static_cast<long long>(rng() % 50);
    a.harm_upper = *a.harm_lower + static_cast<long long>(rng() % 50);
    a.backend_id = "bench";
    out.push_back(std::move(a));
  }
  return out;
}

void BM_Partition(benchmark::State& state) {
  auto assessments = make_assessments(static_cast<size_t>(state.range(0)));
  for (auto _ : state) {
    MatchPartition p = partition(assessments);
    benchmark::DoNotOptimize(p);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Partition)->Range(64, 16384);

void BM_HarmBounds(benchmark::State& state) {
  auto assessments = make_assessments(static_cast<size_t>(state.range(0)));
  MatchPartition p = partition(assessments);
  Period period{Date(2024, 1, 1), Date(2024, 12, 31)};
  for (auto _ : state) {
    HarmBounds b = harm_bounds(p, period, "incidents");
    benchmark::DoNotOptimize(b);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HarmBounds)->Range(64, 16384);

void BM_HarmTrend(benchmark::State& state) {
  auto a1 = make_assessments(1024);
  auto a2 = make_assessments(1024);
  Period p1{Date(2024, 1, 1), Date(2024, 12, 31)};
  Period p2{Date(2025, 1, 1), Date(2025, 12, 31)};
  HarmBounds b1 = harm_bounds(partition(a1), p1, "incidents");
  HarmBounds b2 = harm_bounds(partition(a2), p2, "incidents");
  for (auto _ : state) {
    HarmTrendOutcome outcome = harm_trend(b1, b2);
    benchmark::DoNotOptimize(outcome);
  }
}
BENCHMARK(BM_HarmTrend);

}  // namespace
