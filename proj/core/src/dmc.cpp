#include "ncgs/dmc.hpp"

#include <cmath>

#include "ncgs/error.hpp"
#include "ncgs/mc_tables.hpp"

namespace ncgs {

namespace {

constexpr double kFrozenTolerance = 1e-12;

template <typename T>
EdgeValues load_edge(const GridSpec& grid, std::span<const T> field, const LatticeEdge& e) {
  int ub = e.u + (e.axis == 0);
  int vb = e.v + (e.axis == 1);
  int wb = e.w + (e.axis == 2);
  const std::size_t ia = grid.point_index(e.u, e.v, e.w) * 4;
  const std::size_t ib = grid.point_index(ub, vb, wb) * 4;
  EdgeValues out;
  out.sdf_a = static_cast<double>(field[ia]);
  out.sdf_b = static_cast<double>(field[ib]);
  out.pos_a = grid.position(e.u, e.v, e.w);
  out.pos_b = grid.position(ub, vb, wb);
  out.def_a = Vec3(field[ia + 1], field[ia + 2], field[ia + 3]);
  out.def_b = Vec3(field[ib + 1], field[ib + 2], field[ib + 3]);
  out.deform_scale = grid.deform_scale();
  return out;
}

}  // namespace

double edge_parameter(double sdf_a, double sdf_b) {
  const double denom = sdf_a - sdf_b;
  if (denom == 0.0) return 0.5;
  return sdf_a / denom;
}

Vec3 edge_vertex(const EdgeValues& e) {
  const double t = edge_parameter(e.sdf_a, e.sdf_b);
  const Vec3 pa = e.pos_a + e.deform_scale * e.def_a;
  const Vec3 pb = e.pos_b + e.deform_scale * e.def_b;
  return (1.0 - t) * pa + t * pb;
}

EdgeJacobian edge_vertex_jacobian(const EdgeValues& e) {
  EdgeJacobian j;
  j.t = edge_parameter(e.sdf_a, e.sdf_b);
  const Vec3 pa = e.pos_a + e.deform_scale * e.def_a;
  const Vec3 pb = e.pos_b + e.deform_scale * e.def_b;
  j.vertex = (1.0 - j.t) * pa + j.t * pb;

  const double denom = e.sdf_a - e.sdf_b;
  if (std::abs(denom) >= kFrozenTolerance) {
    const double inv_sq = 1.0 / (denom * denom);
    j.dt_dsdf_a = -e.sdf_b * inv_sq;
    j.dt_dsdf_b = e.sdf_a * inv_sq;
  }
  j.dvertex_dsdf_a = (pb - pa) * j.dt_dsdf_a;
  j.dvertex_dsdf_b = (pb - pa) * j.dt_dsdf_b;
  j.dvertex_ddef_a = (1.0 - j.t) * e.deform_scale;
  j.dvertex_ddef_b = j.t * e.deform_scale;
  return j;
}

template <typename T>
DmcResult dmc_extract_field(const GridSpec& grid, std::span<const T> field) {
  const int k = grid.resolution;
  if (field.size() != grid.num_points() * 4) fail(ErrorCode::kShape, "field size does not match K^3 x 4");

  DmcResult out;
  std::vector<std::int32_t> edge_vertex_id(grid.num_points() * 3, -1);

  auto vertex_for = [&](const LatticeEdge& e) -> std::int32_t {
    const std::size_t key = grid.point_index(e.u, e.v, e.w) * 3 + e.axis;
    std::int32_t& id = edge_vertex_id[key];
    if (id < 0) {
      id = static_cast<std::int32_t>(out.mesh.vertices.size());
      out.mesh.vertices.push_back(edge_vertex(load_edge(grid, field, e)));
      out.vertex_edges.push_back(e);
    }
    return id;
  };

  for (int u = 0; u + 1 < k; ++u) {
    for (int v = 0; v + 1 < k; ++v) {
      for (int w = 0; w + 1 < k; ++w) {
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          const auto& o = detail::kCornerOffset[c];
          if (field[grid.point_index(u + o[0], v + o[1], w + o[2]) * 4] < T(0)) cube |= 1 << c;
        }
        if (cube == 0 || cube == 255) continue;

        std::int32_t local[12];
        for (int e = 0; e < 12; ++e) local[e] = -1;
        const std::int8_t* row = detail::kTriTable[cube];
        for (int i = 0; row[i] >= 0; i += 3) {
          Face f{};
          for (int j = 0; j < 3; ++j) {
            const int e = row[i + j];
            if (local[e] < 0) {
              const auto& ca = detail::kCornerOffset[detail::kEdgeCorners[e][0]];
              const auto& cb = detail::kCornerOffset[detail::kEdgeCorners[e][1]];
              LatticeEdge le;
              le.u = u + std::min(ca[0], cb[0]);
              le.v = v + std::min(ca[1], cb[1]);
              le.w = w + std::min(ca[2], cb[2]);
              le.axis = ca[0] != cb[0] ? 0 : (ca[1] != cb[1] ? 1 : 2);
              local[e] = vertex_for(le);
            }
            f[j] = local[e];
          }
          // Table winding faces the inside; flip so normals point to positive values.
          std::swap(f[1], f[2]);
          out.mesh.faces.push_back(f);
        }
      }
    }
  }
  return out;
}

template DmcResult dmc_extract_field<float>(const GridSpec&, std::span<const float>);
template DmcResult dmc_extract_field<double>(const GridSpec&, std::span<const double>);

DmcResult dmc_extract_detailed(const TsdfDefTensor& tensor) {
  return dmc_extract_field(tensor.grid, std::span<const float>(tensor.data));
}

TriangleMesh dmc_extract(const TsdfDefTensor& tensor) { return dmc_extract_detailed(tensor).mesh; }

EdgeValues edge_values(const TsdfDefTensor& tensor, const LatticeEdge& edge) {
  return load_edge(tensor.grid, std::span<const float>(tensor.data), edge);
}

EdgeJacobian dmc_vertex_jacobian(const TsdfDefTensor& tensor, const LatticeEdge& edge) {
  const EdgeValues e = edge_values(tensor, edge);
  if ((e.sdf_a < 0.0) == (e.sdf_b < 0.0)) fail(ErrorCode::kInvalidArgument, "edge has no sign change");
  return edge_vertex_jacobian(e);
}

}  // namespace ncgs
