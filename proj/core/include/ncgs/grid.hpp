#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ncgs/mesh.hpp"
#include "ncgs/quant.hpp"

namespace ncgs {

/// Width of the truncation band, in grid cells.
inline constexpr double kTruncationCells = 3.0;
/// Physical deformation = stored value * kDeformScale * h.
inline constexpr double kDeformScale = 0.5;

/// K x K x K lattice over [-1, 1]^3 with spacing h = 2 / (K - 1).
struct GridSpec {
  int resolution = 32;

  explicit GridSpec(int k = 32);

  double spacing() const { return 2.0 / (resolution - 1); }
  double truncation() const { return kTruncationCells * spacing(); }
  double deform_scale() const { return kDeformScale * spacing(); }
  std::size_t num_points() const {
    const auto k = static_cast<std::size_t>(resolution);
    return k * k * k;
  }
  /// 0-based lattice indices to position.
  Vec3 position(int u, int v, int w) const {
    const double h = spacing();
    return {-1.0 + u * h, -1.0 + v * h, -1.0 + w * h};
  }
  std::size_t point_index(int u, int v, int w) const {
    const auto k = static_cast<std::size_t>(resolution);
    return (static_cast<std::size_t>(u) * k + static_cast<std::size_t>(v)) * k + static_cast<std::size_t>(w);
  }
  bool operator==(const GridSpec&) const = default;
};

/// K x K x K x 4 tensor in (u, v, w, channel) row-major order. Channel 0 is the
/// truncated signed distance normalized by the truncation band (negative
/// inside); channels 1-3 are the grid-point deformation normalized by
/// kDeformScale * h. All values lie in [-1, 1].
struct TsdfDefTensor {
  static constexpr int kChannels = 4;

  GridSpec grid;
  std::vector<float> data;

  TsdfDefTensor() = default;
  explicit TsdfDefTensor(GridSpec g) : grid(g), data(g.num_points() * kChannels, 0.0f) {}

  std::size_t index(int u, int v, int w, int c) const { return grid.point_index(u, v, w) * kChannels + c; }
  float& at(int u, int v, int w, int c) { return data[index(u, v, w, c)]; }
  float at(int u, int v, int w, int c) const { return data[index(u, v, w, c)]; }

  /// Sum of |deformation| over channels 1-3.
  double deformation_l1() const;
  bool operator==(const TsdfDefTensor&) const = default;
};

/// Channel 0 from the mesh signed distance, deformation zero.
TsdfDefTensor init_tsdf_def(const TriangleMesh& mesh, GridSpec grid);

/// Element-wise uniform quantization of a whole tensor.
TsdfDefTensor quantize(const TsdfDefTensor& tensor, const QuantSpec& spec);

}  // namespace ncgs
