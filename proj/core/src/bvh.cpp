#include "ncgs/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ncgs/error.hpp"

namespace ncgs {

// Ericson, Real-Time Collision Detection, 5.1.5.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return {1.0, 0.0, 0.0};

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return {0.0, 1.0, 0.0};

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return {1.0 - v, v, 0.0};
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return {0.0, 0.0, 1.0};

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return {1.0 - w, 0.0, w};
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return {0.0, 1.0 - w, w};
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return {1.0 - v - w, v, w};
}

SpatialIndex::SpatialIndex(const TriangleMesh& mesh) : mesh_(&mesh) {
  if (mesh.faces.empty()) fail(ErrorCode::kInvalidArgument, "spatial index needs at least one triangle");
  const auto n = static_cast<std::int32_t>(mesh.faces.size());
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0);
  std::vector<Vec3> centroids(n);
  for (std::int32_t f = 0; f < n; ++f) {
    centroids[f] = (mesh.corner(f, 0) + mesh.corner(f, 1) + mesh.corner(f, 2)) / 3.0;
  }
  nodes_.reserve(2 * (n / kLeafSize + 1));
  build(0, n, centroids);
}

std::int32_t SpatialIndex::build(std::int32_t first, std::int32_t count, std::vector<Vec3>& centroids) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.emplace_back();
  AxisBox box, cbox;
  for (std::int32_t i = first; i < first + count; ++i) {
    const std::int32_t f = order_[i];
    for (int k = 0; k < 3; ++k) box.extend(mesh_->corner(f, k));
    cbox.extend(centroids[f]);
  }
  nodes_[id].box = box;
  if (count <= kLeafSize) {
    nodes_[id].first = first;
    nodes_[id].count = count;
    return id;
  }

  int axis = 0;
  cbox.extent().maxCoeff(&axis);
  const std::int32_t mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                   [&](std::int32_t a, std::int32_t b) {
                     if (centroids[a][axis] != centroids[b][axis]) return centroids[a][axis] < centroids[b][axis];
                     return a < b;
                   });
  const std::int32_t left = build(first, mid - first, centroids);
  const std::int32_t right = build(mid, first + count - mid, centroids);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

namespace {

double box_distance_sq(const AxisBox& box, const Vec3& p) {
  const Vec3 d = (box.lo - p).cwiseMax(Vec3::Zero()).cwiseMax(p - box.hi);
  return d.squaredNorm();
}

bool ray_hits_box(const AxisBox& box, const Vec3& origin, const Vec3& inv_dir) {
  double tmin = 0.0;
  double tmax = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    double t0 = (box.lo[a] - origin[a]) * inv_dir[a];
    double t1 = (box.hi[a] - origin[a]) * inv_dir[a];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return false;
  }
  return true;
}

}  // namespace

ClosestHit SpatialIndex::closest_point(const Vec3& query) const {
  ClosestHit best;
  double best_sq = std::numeric_limits<double>::infinity();
  std::int32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (box_distance_sq(node.box, query) >= best_sq) continue;
    if (node.left < 0) {
      for (std::int32_t i = node.first; i < node.first + node.count; ++i) {
        const std::int32_t f = order_[i];
        const Vec3& a = mesh_->corner(f, 0);
        const Vec3& b = mesh_->corner(f, 1);
        const Vec3& c = mesh_->corner(f, 2);
        const Vec3 bary = closest_point_on_triangle(query, a, b, c);
        const Vec3 p = bary[0] * a + bary[1] * b + bary[2] * c;
        const double d2 = (p - query).squaredNorm();
        if (d2 < best_sq || (d2 == best_sq && f < best.triangle)) {
          best_sq = d2;
          best.point = p;
          best.triangle = f;
          best.barycentric = bary;
        }
      }
      continue;
    }
    const Node& l = nodes_[node.left];
    const Node& r = nodes_[node.right];
    const double dl = box_distance_sq(l.box, query);
    const double dr = box_distance_sq(r.box, query);
    // Push the farther child first so the nearer one is visited next.
    if (dl <= dr) {
      stack[top++] = node.right;
      stack[top++] = node.left;
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

int SpatialIndex::count_crossings(const Vec3& origin, const Vec3& dir, bool& grazing) const {
  constexpr double kEdgeTol = 1e-9;
  const Vec3 inv_dir = dir.cwiseInverse();
  int crossings = 0;
  grazing = false;
  std::int32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!ray_hits_box(node.box, origin, inv_dir)) continue;
    if (node.left >= 0) {
      stack[top++] = node.left;
      stack[top++] = node.right;
      continue;
    }
    for (std::int32_t i = node.first; i < node.first + node.count; ++i) {
      const std::int32_t f = order_[i];
      const Vec3& a = mesh_->corner(f, 0);
      const Vec3 e1 = mesh_->corner(f, 1) - a;
      const Vec3 e2 = mesh_->corner(f, 2) - a;
      const Vec3 pvec = dir.cross(e2);
      const double det = e1.dot(pvec);
      const double scale = e1.norm() * e2.norm();
      if (std::abs(det) <= 1e-12 * scale) {
        // Ray parallel to the triangle plane; treat as grazing if coplanar.
        const Vec3 n = e1.cross(e2);
        if (std::abs(n.dot(origin - a)) <= 1e-12 * scale) grazing = true;
        continue;
      }
      const double inv_det = 1.0 / det;
      const Vec3 tvec = origin - a;
      const double u = tvec.dot(pvec) * inv_det;
      if (u < -kEdgeTol || u > 1.0 + kEdgeTol) continue;
      const Vec3 qvec = tvec.cross(e1);
      const double v = dir.dot(qvec) * inv_det;
      if (v < -kEdgeTol || u + v > 1.0 + kEdgeTol) continue;
      const double t = e2.dot(qvec) * inv_det;
      if (t <= 0.0) continue;
      if (u < kEdgeTol || v < kEdgeTol || u + v > 1.0 - kEdgeTol) {
        grazing = true;
        continue;
      }
      ++crossings;
    }
  }
  return crossings;
}

ClosestHit closest_point(const SpatialIndex& index, const Vec3& query) { return index.closest_point(query); }

bool is_inside(const SpatialIndex& index, const Vec3& query) {
  // Fixed irrational-ish direction; deterministic jitter sequence on grazing hits.
  Vec3 dir(0.5773502691896258, 0.5773502691896257 + 1.3e-3, 0.5773502691896259 - 2.1e-3);
  std::uint64_t state = 0x9E3779B97F4A7C15ull;
  int last = 0;
  for (int attempt = 0; attempt < 16; ++attempt) {
    bool grazing = false;
    last = index.count_crossings(query, dir.normalized(), grazing);
    if (!grazing) return (last % 2) == 1;
    for (int a = 0; a < 3; ++a) {
      state ^= state << 13;
      state ^= state >> 7;
      state ^= state << 17;
      dir[a] += (static_cast<double>(state >> 11) * 0x1.0p-53 - 0.5) * 0.2;
    }
  }
  return (last % 2) == 1;
}

double signed_distance(const SpatialIndex& index, const Vec3& query) {
  const double d = index.closest_point(query).distance;
  return is_inside(index, query) ? -d : d;
}

}  // namespace ncgs
