#pragma once

#include <cstdint>
#include <vector>

#include "ncgs/mesh.hpp"

namespace ncgs {

struct ClosestHit {
  double distance = std::numeric_limits<double>::infinity();
  Vec3 point = Vec3::Zero();
  std::int32_t triangle = -1;
  /// Barycentric weights of `point` on `triangle`.
  Vec3 barycentric = Vec3::Zero();
};

/// Closest point on triangle (a, b, c) to p; returns the barycentric weights.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Median-split bounding-volume hierarchy over the triangles of a mesh.
/// Immutable after construction; queries are safe from multiple threads.
class SpatialIndex {
 public:
  static constexpr int kLeafSize = 4;

  explicit SpatialIndex(const TriangleMesh& mesh);

  const TriangleMesh& mesh() const { return *mesh_; }
  std::size_t num_nodes() const { return nodes_.size(); }

  ClosestHit closest_point(const Vec3& query) const;

  /// Number of triangles crossed by the ray origin + t * dir, t > 0.
  /// Sets `grazing` when a hit lands within tolerance of an edge or vertex.
  int count_crossings(const Vec3& origin, const Vec3& dir, bool& grazing) const;

 private:
  struct Node {
    AxisBox box;
    std::int32_t left = -1;   // child index, or -1 for a leaf
    std::int32_t right = -1;
    std::int32_t first = 0;   // leaf range into order_
    std::int32_t count = 0;
  };

  std::int32_t build(std::int32_t first, std::int32_t count, std::vector<Vec3>& centroids);

  const TriangleMesh* mesh_;
  std::vector<Node> nodes_;
  std::vector<std::int32_t> order_;
};

ClosestHit closest_point(const SpatialIndex& index, const Vec3& query);

/// Ray-parity inside test. Requires a closed, consistently oriented mesh;
/// the result is unspecified otherwise.
bool is_inside(const SpatialIndex& index, const Vec3& query);

/// Signed distance, negative inside.
double signed_distance(const SpatialIndex& index, const Vec3& query);

}  // namespace ncgs
