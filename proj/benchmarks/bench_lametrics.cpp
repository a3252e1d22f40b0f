#include <random>

#include "benchmark/benchmark.h"
#include "ruq/lametrics.hpp"

namespace {

ruq::SegMaskSet make_masks(std::size_t n, std::size_t side, std::size_t k) {
  std::mt19937 gen(11);
  ruq::SegMaskSet s;
  s.count = n;
  s.num_classes = k;
  s.height = side;
  s.width = side;
  s.masks.resize(n * side * side);
  for (auto& px : s.masks) px = static_cast<std::uint16_t>(gen() % k);
  return s;
}

}  // namespace

static void BM_PatchesPdLa(benchmark::State& state) {
  const auto s = make_masks(2, static_cast<std::size_t>(state.range(0)), 19);
  const auto a = ruq::mask_view(s, 0);
  const auto b = ruq::mask_view(s, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ruq::patches_pd_la(a, b, 3));
  }
}
BENCHMARK(BM_PatchesPdLa)->Arg(128)->Arg(512);

static void BM_PatchesLa(benchmark::State& state) {
  const auto s = make_masks(2, static_cast<std::size_t>(state.range(0)), 19);
  const auto a = ruq::mask_view(s, 0);
  const auto b = ruq::mask_view(s, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ruq::patches_la(a, b, 3));
  }
}
BENCHMARK(BM_PatchesLa)->Arg(128)->Arg(512);

BENCHMARK_MAIN();
