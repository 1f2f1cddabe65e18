#include <benchmark/benchmark.h>

#include <random>

#include "ncgs/nn.hpp"

namespace {

using ncgs::nn::Conv3Spec;
using ncgs::nn::Tensor4;

Tensor4<float> random_volume(int k, int channels, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Tensor4<float> t(k, k, k, channels);
  for (auto& v : t.values) v = u(rng);
  return t;
}

std::vector<float> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(-0.1f, 0.1f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

void BM_Conv3dForward(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const Conv3Spec spec{3, static_cast<int>(state.range(1)), static_cast<int>(state.range(2))};
  std::mt19937_64 rng(1);
  const auto input = random_volume(k, spec.in_channels, rng);
  const auto weights = random_vector(spec.weight_count(), rng);
  const auto bias = random_vector(static_cast<std::size_t>(spec.out_channels), rng);
  for (auto _ : state) {
    auto out = ncgs::nn::conv3d<float>(input, weights, bias, spec);
    benchmark::DoNotOptimize(out.values.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(k) * k * k);
}
BENCHMARK(BM_Conv3dForward)->Args({8, 16, 64})->Args({16, 8, 64})->Args({32, 16, 4})->Unit(benchmark::kMillisecond);

void BM_Conv3dBackward(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const Conv3Spec spec{3, static_cast<int>(state.range(1)), static_cast<int>(state.range(2))};
  std::mt19937_64 rng(2);
  const auto input = random_volume(k, spec.in_channels, rng);
  const auto grad_out = random_volume(k, spec.out_channels, rng);
  const auto weights = random_vector(spec.weight_count(), rng);
  for (auto _ : state) {
    auto g = ncgs::nn::conv3d_backward<float>(input, weights, grad_out, spec);
    benchmark::DoNotOptimize(g.weights.data());
  }
}
BENCHMARK(BM_Conv3dBackward)->Args({8, 16, 64})->Args({16, 8, 64})->Unit(benchmark::kMillisecond);

}  // namespace
