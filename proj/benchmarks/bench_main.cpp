#include <benchmark/benchmark.h>

#include "rsched/oracle.hpp"
#include "rsched/policy.hpp"
#include "rsched/sim.hpp"
#include "rsched/solver.hpp"

using namespace rsched;

namespace {

void BM_ValueIterateHermite(benchmark::State& state) {
  ModelParams p;
  p.horizon = static_cast<int>(state.range(0));
  const Grid g = make_grid(p, {}, Space::folded);
  for (auto _ : state) {
    benchmark::DoNotOptimize(value_iterate(p, g, {QuadRule::gauss_hermite, 64}));
  }
  state.counters["nodes"] = static_cast<double>(g.size());
}
BENCHMARK(BM_ValueIterateHermite)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_ValueIterateTrapezoid(benchmark::State& state) {
  ModelParams p;
  p.horizon = static_cast<int>(state.range(0));
  const Grid g = make_grid(p, {}, Space::folded);
  for (auto _ : state) {
    benchmark::DoNotOptimize(value_iterate(p, g, {QuadRule::trapezoid, 64}));
  }
}
BENCHMARK(BM_ValueIterateTrapezoid)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_ValueIterateOriginalGrid(benchmark::State& state) {
  ModelParams p;
  const Grid g = make_grid(p, {}, Space::original);
  for (auto _ : state) {
    benchmark::DoNotOptimize(value_iterate(p, g, {QuadRule::gauss_hermite, 64}));
  }
}
BENCHMARK(BM_ValueIterateOriginalGrid)->Unit(benchmark::kMillisecond);

void BM_SimulatePolicy(benchmark::State& state) {
  ModelParams p;
  p.gamma = 0.02;
  const Grid g = make_grid(p, {}, Space::folded);
  const ThresholdSchedule s = extract_thresholds(value_iterate(p, g, {}).policy, g);
  const auto rule = schedule_rule(s);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_policy(p, rule, n, 1));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_SimulatePolicy)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_BruteForce(benchmark::State& state) {
  ModelParams p;
  p.horizon = static_cast<int>(state.range(0));
  const auto chain = quantize(p, 9, 3);
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_optimal(chain));
}
BENCHMARK(BM_BruteForce)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
