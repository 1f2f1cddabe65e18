#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ncgs/mesh.hpp"

namespace ncgs {

struct Nearest {
  std::size_t index = 0;
  double distance = 0.0;
};

/// Exact nearest-neighbour search: a kd-tree, or a linear scan for small sets.
class PointIndex {
 public:
  static constexpr std::size_t kBruteForceBelow = 1000;
  static constexpr std::size_t kLeafSize = 8;

  explicit PointIndex(std::span<const Vec3> points);
  Nearest nearest(const Vec3& query) const;
  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = 0;
    double split = 0.0;
  };
  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, const Vec3& q, Nearest& best, double& best_sq) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

struct MetricsRecord {
  double cd = 0.0;
  double nc = 0.0;
  double f1_005 = 0.0;
  double f1_01 = 0.0;
};

/// 0.5 * mean over a of min distance to b + 0.5 * the same from b to a.
double chamfer_distance(const SurfaceSamples& a, const SurfaceSamples& b);
/// Same pairing as the chamfer distance, averaging |n_x . n_nn(x)|.
double normal_consistency(const SurfaceSamples& a, const SurfaceSamples& b);

struct PrecisionRecall {
  double recall = 0.0;     // fraction of `a` within eps of `b`
  double precision = 0.0;  // fraction of `b` within eps of `a`
  double f_score() const { return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0; }
};
PrecisionRecall precision_recall(const SurfaceSamples& a, const SurfaceSamples& b, double eps);
double f_score(const SurfaceSamples& a, const SurfaceSamples& b, double eps);

/// All four metrics from one nearest-neighbour pass per direction.
MetricsRecord evaluate_samples(const SurfaceSamples& recon, const SurfaceSamples& gt);
MetricsRecord evaluate_pair(const TriangleMesh& recon, const TriangleMesh& gt, std::size_t n_eval = 100000,
                            std::uint64_t seed = 0);

struct RdPoint {
  std::string label;
  double ratio = 0.0;
  MetricsRecord metrics;
};

/// CSV `label,ratio,cd,nc,f1_005,f1_01`, rows sorted by ratio.
void emit_rd(std::vector<RdPoint> points, const std::filesystem::path& path);
std::vector<RdPoint> read_rd(const std::filesystem::path& path);

struct ShapeMetrics {
  std::string label;
  std::string shape_id;
  MetricsRecord metrics;
};

/// CSV `label,shape_id,cd,nc,f1_005,f1_01`.
void emit_shape_metrics(std::span<const ShapeMetrics> rows, const std::filesystem::path& path);

}  // namespace ncgs
