#include <benchmark/benchmark.h>

#include "focus/decoder.h"
#include "focus/noise_mask.h"
#include "focus/synthetic_model.h"

namespace {

using namespace focus;

std::vector<ImageTensor> solid_images(const SyntheticProvider& model, std::size_t n, int size) {
  std::vector<ImageTensor> images;
  for (std::size_t k = 0; k < n; ++k) {
    images.push_back(render_solid(model.palette(static_cast<TokenId>(3 * k + 1)), size, size));
  }
  return images;
}

void BM_FocusStep(benchmark::State& state) {
  const SyntheticProvider model;
  const auto images = solid_images(model, static_cast<std::size_t>(state.range(0)), 32);
  DecodingConfig config;
  config.strategy = Strategy::kFocus;
  const RandomStream noise(1);
  const ExecutionOptions exec{static_cast<int>(state.range(1)), false, false};
  std::uint64_t step = 0;
  for (auto _ : state) {
    auto out = focus_step(model, images, "Describe all images.", {}, config, noise, step++, exec);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * (state.range(0) + 1));
}
BENCHMARK(BM_FocusStep)->ArgsProduct({{1, 2, 4}, {1, 4}});

void BM_ApplyNoise(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const auto type = static_cast<NoiseType>(state.range(1));
  const ImageTensor image = ImageTensor::filled(size, size, 3, 0.25f);
  RandomStream rng(2);
  for (auto _ : state) {
    auto out = apply_noise(image, {type, 0.3}, rng);
    benchmark::DoNotOptimize(out);
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(size) * size * 3 * 4);
}
BENCHMARK(BM_ApplyNoise)->ArgsProduct({{64, 256}, {0, 1, 2}});

void BM_SampleToken(benchmark::State& state) {
  std::vector<double> values(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = 0.01 * static_cast<double>(i % 97);
  const LogitVector logits(std::move(values), "bench");
  RandomStream rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(sample_token(logits, 0.8, rng));
}
BENCHMARK(BM_SampleToken)->Arg(32)->Arg(32000);

}  // namespace
BENCHMARK_MAIN();
