#include "ncgs/grid.hpp"

#include <algorithm>
#include <cmath>

#include "ncgs/bvh.hpp"
#include "ncgs/error.hpp"

namespace ncgs {

GridSpec::GridSpec(int k) : resolution(k) {
  if (k < 8) fail(ErrorCode::kInvalidArgument, "grid resolution must be at least 8");
}

double TsdfDefTensor::deformation_l1() const {
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); i += kChannels) {
    sum += std::abs(data[i + 1]) + std::abs(data[i + 2]) + std::abs(data[i + 3]);
  }
  return sum;
}

TsdfDefTensor init_tsdf_def(const TriangleMesh& mesh, GridSpec grid) {
  const SpatialIndex index(mesh);
  TsdfDefTensor out(grid);
  const double band = grid.truncation();
  const int k = grid.resolution;
  for (int u = 0; u < k; ++u) {
    for (int v = 0; v < k; ++v) {
      for (int w = 0; w < k; ++w) {
        const double sd = signed_distance(index, grid.position(u, v, w));
        out.at(u, v, w, 0) = static_cast<float>(std::clamp(sd, -band, band) / band);
      }
    }
  }
  return out;
}

TsdfDefTensor quantize(const TsdfDefTensor& tensor, const QuantSpec& spec) {
  spec.validate();
  TsdfDefTensor out = tensor;
  quantize_inplace(std::span<float>(out.data), spec);
  return out;
}

}  // namespace ncgs
