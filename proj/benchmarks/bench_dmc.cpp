#include <benchmark/benchmark.h>

#include <algorithm>

#include "ncgs/dmc.hpp"
#include "ncgs/grid.hpp"
#include "ncgs/primitives.hpp"

namespace {

ncgs::TsdfDefTensor sphere_tensor(int k) {
  const ncgs::GridSpec grid(k);
  ncgs::TsdfDefTensor t(grid);
  const double tau = grid.truncation();
  for (int u = 0; u < k; ++u)
    for (int v = 0; v < k; ++v)
      for (int w = 0; w < k; ++w) {
        const double d = ncgs::sdf::sphere(grid.position(u, v, w), ncgs::Vec3::Zero(), 0.6);
        t.at(u, v, w, 0) = static_cast<float>(std::clamp(d / tau, -1.0, 1.0));
      }
  return t;
}

void BM_DmcExtract(benchmark::State& state) {
  const auto tensor = sphere_tensor(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto mesh = ncgs::dmc_extract(tensor);
    benchmark::DoNotOptimize(mesh.faces.data());
  }
}
BENCHMARK(BM_DmcExtract)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace
