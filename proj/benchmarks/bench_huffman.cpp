#include <benchmark/benchmark.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ncgs/huffman.hpp"

namespace {

// Roughly Gaussian symbols over 2^N + 1 levels, like quantized weights.
std::vector<std::uint32_t> symbols(std::size_t n, int bits) {
  const auto levels = (1u << bits) + 1;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(levels / 2.0, levels / 12.0);
  std::vector<std::uint32_t> out(n);
  for (auto& s : out) s = static_cast<std::uint32_t>(std::clamp(std::lround(g(rng)), 0L, long(levels - 1)));
  return out;
}

ncgs::HuffmanTable table_for(std::span<const std::uint32_t> syms, int bits) {
  std::vector<std::uint64_t> hist((1u << bits) + 1, 0);
  for (auto s : syms) ++hist[s];
  return ncgs::huffman_build(hist);
}

void BM_HuffmanEncode(benchmark::State& state) {
  const auto syms = symbols(static_cast<std::size_t>(state.range(0)), 8);
  const auto table = table_for(syms, 8);
  for (auto _ : state) {
    auto bytes = ncgs::huffman_encode(syms, table);
    benchmark::DoNotOptimize(bytes.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HuffmanEncode)->Arg(1 << 16)->Arg(1 << 20)->Unit(benchmark::kMicrosecond);

void BM_HuffmanDecode(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto syms = symbols(n, 8);
  const auto table = table_for(syms, 8);
  const auto bytes = ncgs::huffman_encode(syms, table);
  for (auto _ : state) {
    auto out = ncgs::huffman_decode(bytes, table, n);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HuffmanDecode)->Arg(1 << 16)->Arg(1 << 20)->Unit(benchmark::kMicrosecond);

}  // namespace
