#include <random>
#include <vector>

#include "benchmark/benchmark.h"
#include "ruq/cpa.hpp"

namespace {

std::pair<std::vector<double>, std::vector<double>> make_instance(std::size_t n,
                                                                  std::size_t levels) {
  std::mt19937 gen(42);
  std::uniform_real_distribution<double> real(0.0, 1.0);
  std::vector<double> pred(n), outcome(n);
  for (std::size_t i = 0; i < n; ++i) {
    pred[i] = real(gen);
    outcome[i] = static_cast<double>(gen() % levels);
  }
  return {pred, outcome};
}

}  // namespace

static void BM_Auroc(benchmark::State& state) {
  const auto [pred, outcome] = make_instance(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ruq::auroc(pred, outcome));
  }
}
BENCHMARK(BM_Auroc)->Arg(1000)->Arg(100000);

static void BM_Cpa(benchmark::State& state) {
  const auto [pred, outcome] = make_instance(static_cast<std::size_t>(state.range(0)),
                                             static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ruq::cpa(pred, outcome));
  }
}
BENCHMARK(BM_Cpa)->Args({1000, 16})->Args({10000, 64})->Args({10000, 256});

BENCHMARK_MAIN();
