#include <random>

#include "benchmark/benchmark.h"
#include "ruq/retrieval.hpp"

namespace {

ruq::EmbeddingSet make_embeddings(std::size_t n, std::size_t d) {
  std::mt19937 gen(7);
  std::normal_distribution<float> normal(0.f, 1.f);
  ruq::EmbeddingSet e;
  e.count = n;
  e.dim = d;
  e.data.resize(n * d);
  for (auto& v : e.data) v = normal(gen);
  for (std::size_t i = 0; i < n; ++i) e.ids.push_back(std::to_string(i));
  return e;
}

}  // namespace

static void BM_NearestNeighbors(benchmark::State& state) {
  const auto e = make_embeddings(static_cast<std::size_t>(state.range(0)),
                                 static_cast<std::size_t>(state.range(1)));
  const auto threads = static_cast<unsigned>(state.range(2));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ruq::nearest_neighbors(e, ruq::Metric::cosine, threads));
  }
}
BENCHMARK(BM_NearestNeighbors)
    ->Args({1024, 64, 1})
    ->Args({1024, 64, 2})
    ->Args({4096, 64, 2})
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
