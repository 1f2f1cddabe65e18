#include "ncgs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "ncgs/error.hpp"

namespace ncgs {

PointIndex::PointIndex(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  if (points_.empty()) fail(ErrorCode::kInvalidArgument, "point index needs at least one point");
  if (points_.size() > std::numeric_limits<std::uint32_t>::max()) fail(ErrorCode::kInvalidArgument, "too many points");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (points_.size() >= kBruteForceBelow) build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t PointIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  Node& n = nodes_[id];
  n.left = left;
  n.right = right;
  n.axis = axis;
  n.split = split;
  return id;
}

void PointIndex::search(std::int32_t id, const Vec3& q, Nearest& best, double& best_sq) const {
  const Node& n = nodes_[id];
  if (n.left < 0) {
    for (std::uint32_t i = n.begin; i < n.end; ++i) {
      const double d = (points_[order_[i]] - q).squaredNorm();
      if (d < best_sq || (d == best_sq && order_[i] < best.index)) {
        best_sq = d;
        best.index = order_[i];
      }
    }
    return;
  }
  const double diff = q[n.axis] - n.split;
  const std::int32_t near = diff < 0.0 ? n.left : n.right;
  const std::int32_t far = diff < 0.0 ? n.right : n.left;
  search(near, q, best, best_sq);
  if (diff * diff <= best_sq) search(far, q, best, best_sq);
}

Nearest PointIndex::nearest(const Vec3& query) const {
  Nearest best;
  double best_sq = std::numeric_limits<double>::infinity();
  if (nodes_.empty()) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const double d = (points_[i] - query).squaredNorm();
      if (d < best_sq) {
        best_sq = d;
        best.index = i;
      }
    }
  } else {
    best.index = std::numeric_limits<std::size_t>::max();
    search(0, query, best, best_sq);
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

namespace {

void require_samples(const SurfaceSamples& a, const SurfaceSamples& b) {
  if (a.points.empty() || b.points.empty()) fail(ErrorCode::kInvalidArgument, "metric needs non-empty point sets");
}

// Nearest neighbour in `to` for every point of `from`.
std::vector<Nearest> match(const SurfaceSamples& from, const SurfaceSamples& to) {
  const PointIndex index(to.points);
  std::vector<Nearest> out(from.points.size());
  for (std::size_t i = 0; i < from.points.size(); ++i) out[i] = index.nearest(from.points[i]);
  return out;
}

double mean_distance(const std::vector<Nearest>& m) {
  double s = 0.0;
  for (const Nearest& n : m) s += n.distance;
  return s / static_cast<double>(m.size());
}

double mean_normal_dot(const SurfaceSamples& from, const SurfaceSamples& to, const std::vector<Nearest>& m) {
  if (from.normals.size() != from.points.size() || to.normals.size() != to.points.size()) {
    fail(ErrorCode::kInvalidArgument, "normal consistency needs a normal per point");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += std::abs(from.normals[i].dot(to.normals[m[i].index]));
  return s / static_cast<double>(m.size());
}

double fraction_within(const std::vector<Nearest>& m, double eps) {
  std::size_t n = 0;
  for (const Nearest& x : m) n += x.distance < eps;
  return static_cast<double>(n) / static_cast<double>(m.size());
}

std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_label(const std::string& s) {
  if (s.find_first_of(",\n\r") != std::string::npos) fail(ErrorCode::kInvalidArgument, "CSV label contains a separator: " + s);
}

}  // namespace

double chamfer_distance(const SurfaceSamples& a, const SurfaceSamples& b) {
  require_samples(a, b);
  return 0.5 * mean_distance(match(a, b)) + 0.5 * mean_distance(match(b, a));
}

double normal_consistency(const SurfaceSamples& a, const SurfaceSamples& b) {
  require_samples(a, b);
  return 0.5 * mean_normal_dot(a, b, match(a, b)) + 0.5 * mean_normal_dot(b, a, match(b, a));
}

PrecisionRecall precision_recall(const SurfaceSamples& a, const SurfaceSamples& b, double eps) {
  if (!(eps > 0.0)) fail(ErrorCode::kInvalidArgument, "F-score threshold must be positive");
  require_samples(a, b);
  return {fraction_within(match(a, b), eps), fraction_within(match(b, a), eps)};
}

double f_score(const SurfaceSamples& a, const SurfaceSamples& b, double eps) {
  return precision_recall(a, b, eps).f_score();
}

MetricsRecord evaluate_samples(const SurfaceSamples& recon, const SurfaceSamples& gt) {
  require_samples(recon, gt);
  const std::vector<Nearest> rg = match(recon, gt);
  const std::vector<Nearest> gr = match(gt, recon);
  MetricsRecord m;
  m.cd = 0.5 * mean_distance(rg) + 0.5 * mean_distance(gr);
  m.nc = 0.5 * mean_normal_dot(recon, gt, rg) + 0.5 * mean_normal_dot(gt, recon, gr);
  m.f1_005 = PrecisionRecall{fraction_within(rg, 0.005), fraction_within(gr, 0.005)}.f_score();
  m.f1_01 = PrecisionRecall{fraction_within(rg, 0.01), fraction_within(gr, 0.01)}.f_score();
  return m;
}

MetricsRecord evaluate_pair(const TriangleMesh& recon, const TriangleMesh& gt, std::size_t n_eval,
                            std::uint64_t seed) {
  return evaluate_samples(sample_surface(recon, n_eval, seed), sample_surface(gt, n_eval, seed + 1));
}

void emit_rd(std::vector<RdPoint> points, const std::filesystem::path& path) {
  if (points.empty()) fail(ErrorCode::kInvalidArgument, "RD curve needs at least one point");
  std::stable_sort(points.begin(), points.end(), [](const RdPoint& a, const RdPoint& b) { return a.ratio < b.ratio; });
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << "label,ratio,cd,nc,f1_005,f1_01\n";
  for (const RdPoint& p : points) {
    check_label(p.label);
    if (!(p.ratio > 0.0)) fail(ErrorCode::kInvalidArgument, "RD ratio must be positive");
    out << p.label << ',' << format_metric(p.ratio) << ',' << format_metric(p.metrics.cd) << ','
        << format_metric(p.metrics.nc) << ',' << format_metric(p.metrics.f1_005) << ','
        << format_metric(p.metrics.f1_01) << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

std::vector<RdPoint> read_rd(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "label,ratio,cd,nc,f1_005,f1_01") {
    fail(ErrorCode::kParse, "unexpected RD header in " + path.string());
  }
  std::vector<RdPoint> points;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 6) fail(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected 6 fields");
    RdPoint p;
    p.label = fields[0];
    try {
      p.ratio = std::stod(fields[1]);
      p.metrics = {std::stod(fields[2]), std::stod(fields[3]), std::stod(fields[4]), std::stod(fields[5])};
    } catch (const std::exception&) {
      fail(ErrorCode::kParse, "line " + std::to_string(line_no) + ": malformed number");
    }
    points.push_back(p);
  }
  return points;
}

void emit_shape_metrics(std::span<const ShapeMetrics> rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << "label,shape_id,cd,nc,f1_005,f1_01\n";
  for (const ShapeMetrics& r : rows) {
    check_label(r.label);
    check_label(r.shape_id);
    out << r.label << ',' << r.shape_id << ',' << format_metric(r.metrics.cd) << ',' << format_metric(r.metrics.nc)
        << ',' << format_metric(r.metrics.f1_005) << ',' << format_metric(r.metrics.f1_01) << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace ncgs
