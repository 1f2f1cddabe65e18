#include <benchmark/benchmark.h>

#include "ncgs/metrics.hpp"
#include "ncgs/primitives.hpp"

namespace {

void BM_Chamfer(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = ncgs::sample_surface(ncgs::uv_sphere(0.5, 64, 128), n, 1);
  const auto b = ncgs::sample_surface(ncgs::uv_sphere(0.5, 64, 128, ncgs::Vec3(0.01, 0.0, 0.0)), n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ncgs::chamfer_distance(a, b));
}
BENCHMARK(BM_Chamfer)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_PointIndexBuild(benchmark::State& state) {
  const auto s = ncgs::sample_surface(ncgs::uv_sphere(0.5, 64, 128), static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) {
    ncgs::PointIndex index(s.points);
    benchmark::DoNotOptimize(index.size());
  }
}
BENCHMARK(BM_PointIndexBuild)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace
