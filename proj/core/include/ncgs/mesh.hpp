#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace ncgs {

using Vec3 = Eigen::Vector3d;
using Face = std::array<std::int32_t, 3>;

/// Indexed triangle mesh. Coordinates are unitless; after normalization they
/// live in [-1, 1]^3.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  bool empty() const { return faces.empty(); }
  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_faces() const { return faces.size(); }

  Vec3 corner(std::size_t face, int k) const { return vertices[faces[face][k]]; }
  /// Unnormalized face normal, |n| = 2 * area.
  Vec3 face_cross(std::size_t face) const;
  double face_area(std::size_t face) const { return 0.5 * face_cross(face).norm(); }
  double total_area() const;
};

/// Points on a surface together with the normal of the face each came from.
struct SurfaceSamples {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;

  std::size_t count() const { return points.size(); }
};

struct AxisBox {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const AxisBox& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  Vec3 extent() const { return hi - lo; }
  Vec3 center() const { return 0.5 * (lo + hi); }
  bool valid() const { return (lo.array() <= hi.array()).all(); }
};

AxisBox bounding_box(const TriangleMesh& mesh);

/// Reads a Wavefront OBJ file. Only `v` and `f` records are interpreted;
/// polygons are fan-triangulated and zero-area triangles are dropped.
TriangleMesh load_obj(const std::filesystem::path& path);
TriangleMesh parse_obj(std::string_view text);

void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path);
std::string format_obj(const TriangleMesh& mesh);

/// Uniform scale + translation so the longest bounding-box side spans
/// 2 * (1 - margin), centered at the origin.
TriangleMesh normalize_unit_cube(const TriangleMesh& mesh, double margin = 0.0);

/// Area-weighted random points with their source face normals.
SurfaceSamples sample_surface(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed);

}  // namespace ncgs
