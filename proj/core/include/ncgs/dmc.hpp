#pragma once

#include <span>
#include <vector>

#include "ncgs/grid.hpp"
#include "ncgs/mesh.hpp"

namespace ncgs {

/// Lattice edge from grid point (u, v, w) to its +1 neighbour along `axis`.
struct LatticeEdge {
  int u = 0;
  int v = 0;
  int w = 0;
  int axis = 0;

  bool operator==(const LatticeEdge&) const = default;
};

/// Deformable marching cubes output: the mesh and, per vertex, the lattice
/// edge that produced it.
struct DmcResult {
  TriangleMesh mesh;
  std::vector<LatticeEdge> vertex_edges;
};

/// Scalars that determine one surface vertex. `deform_scale` is beta * h.
struct EdgeValues {
  double sdf_a = 0.0;
  double sdf_b = 0.0;
  Vec3 pos_a = Vec3::Zero();
  Vec3 pos_b = Vec3::Zero();
  Vec3 def_a = Vec3::Zero();
  Vec3 def_b = Vec3::Zero();
  double deform_scale = 0.0;
};

/// Partial derivatives of an edge vertex. The deformation blocks are
/// multiples of the identity, stored as their scalar factor.
struct EdgeJacobian {
  double t = 0.0;
  Vec3 vertex = Vec3::Zero();
  double dt_dsdf_a = 0.0;
  double dt_dsdf_b = 0.0;
  Vec3 dvertex_dsdf_a = Vec3::Zero();
  Vec3 dvertex_dsdf_b = Vec3::Zero();
  double dvertex_ddef_a = 0.0;
  double dvertex_ddef_b = 0.0;
};

double edge_parameter(double sdf_a, double sdf_b);
Vec3 edge_vertex(const EdgeValues& e);
EdgeJacobian edge_vertex_jacobian(const EdgeValues& e);

/// Marching cubes on channel 0 of a K^3 x 4 field (float or double), with
/// vertices interpolated between deformed corner positions. Triangles are
/// oriented with normals toward positive values.
template <typename T>
DmcResult dmc_extract_field(const GridSpec& grid, std::span<const T> field);

DmcResult dmc_extract_detailed(const TsdfDefTensor& tensor);
TriangleMesh dmc_extract(const TsdfDefTensor& tensor);

EdgeValues edge_values(const TsdfDefTensor& tensor, const LatticeEdge& edge);
EdgeJacobian dmc_vertex_jacobian(const TsdfDefTensor& tensor, const LatticeEdge& edge);

}  // namespace ncgs
