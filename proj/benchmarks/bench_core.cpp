#include <benchmark/benchmark.h>

#include "nestedaa/gas.hpp"
#include "nestedaa/instances.hpp"
#include "nestedaa/ksolve.hpp"
#include "nestedaa/nested.hpp"
#include "nestedaa/qcheck.hpp"

using namespace nestedaa;

namespace {

KnapsackInstance instance(std::size_t n) {
  return reorder_items(generate_instance({n, 1000, CorrelationType::Uncorrelated, 10, 5}),
                       ItemOrdering::DensityDescending);
}

void BM_OptimalDp(benchmark::State &state) {
  const auto inst = instance(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimal_solution(inst));
  }
}
BENCHMARK(BM_OptimalDp)->Arg(20)->Arg(40)->Arg(60);

void BM_PartialMarked(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto inst = instance(n);
  const auto y = greedy_solution(inst).value;
  for (auto _ : state) {
    benchmark::DoNotOptimize(enumerate_partial_marked(inst, y, n / 2));
  }
}
BENCHMARK(BM_PartialMarked)->Arg(16)->Arg(24);

void BM_BuildEnsemble(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto inst = instance(n);
  const auto g = greedy_solution(inst);
  const auto bias = BiasConfig::make(inst, 0.0, g.bits);
  const auto marked = enumerate_partial_marked(inst, g.value, n / 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_partial_ensemble(inst, bias, marked));
  }
}
BENCHMARK(BM_BuildEnsemble)->Arg(16)->Arg(24);

void BM_BaselineGas(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto inst = instance(n);
  const auto bias = BiasConfig::make(inst, 0.0, greedy_solution(inst).bits);
  MarkedSetCache cache(inst);
  RunOptions run;
  run.budget = budget(10.0, n, 2.0);
  run.cache = &cache;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    CounterRng rng(seed++);
    benchmark::DoNotOptimize(baseline_gas(inst, bias, run, rng));
  }
}
BENCHMARK(BM_BaselineGas)->Arg(12)->Arg(18);

void BM_NestedGas(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto inst = instance(n);
  const auto bias = BiasConfig::make(inst, 0.0, greedy_solution(inst).bits);
  MarkedSetCache cache(inst);
  NestedOptions opt;
  opt.run.budget = budget(10.0, n, 2.0);
  opt.run.cache = &cache;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    CounterRng rng(seed++);
    benchmark::DoNotOptimize(nested_gas(inst, bias, opt, rng));
  }
}
BENCHMARK(BM_NestedGas)->Arg(12)->Arg(18);

void BM_Statevector(benchmark::State &state) {
  KnapsackInstance inst;
  inst.weights = {3, 2, 4, 1};
  inst.profits = {5, 3, 6, 1};
  inst.capacity = 6;
  const auto g = greedy_solution(inst);
  const auto bias = BiasConfig::make(inst, 1.0, g.bits);
  for (auto _ : state) {
    benchmark::DoNotOptimize(qcheck::run_nested_operator(inst, bias, 2, g.value, 1, 1));
  }
}
BENCHMARK(BM_Statevector);

} // namespace

BENCHMARK_MAIN();
