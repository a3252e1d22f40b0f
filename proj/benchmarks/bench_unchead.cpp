#include <random>

#include "benchmark/benchmark.h"
#include "ruq/synth.hpp"
#include "ruq/unchead.hpp"

static void BM_Forward(benchmark::State& state) {
  ruq::HeadConfig cfg;
  cfg.input_dim = 16;
  cfg.unc_width = static_cast<std::size_t>(state.range(0));
  cfg.seed = 3;
  const auto params = ruq::init_head(cfg);
  std::vector<float> x(cfg.input_dim, 0.5f);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ruq::forward(params, std::span<const float>(x)));
  }
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(256)->Arg(512);

static void BM_TrainEpoch(benchmark::State& state) {
  auto spec = ruq::planted_preset(1);
  spec.n = 1024;
  const auto data = ruq::generate(spec);
  ruq::HeadConfig cfg;
  cfg.unc_width = static_cast<std::size_t>(state.range(0));
  cfg.epochs = 1;
  cfg.warmup_epochs = 1;
  cfg.batch_size = 256;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ruq::train_head(data.embeddings, data.losses, cfg));
  }
}
BENCHMARK(BM_TrainEpoch)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
