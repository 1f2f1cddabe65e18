#pragma once

// Reference implementations used only by tests. They are written for clarity,
// not speed, and share no code with the library paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <unistd.h>

#include "ncgs/mesh.hpp"
#include "ncgs/nn.hpp"

namespace ncgs::testing {

inline double brute_nearest(const Vec3& q, std::span<const Vec3> pts, std::size_t* index = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = (pts[i] - q).norm();
    if (d < best) {
      best = d;
      if (index) *index = i;
    }
  }
  return best;
}

inline double brute_chamfer(const SurfaceSamples& a, const SurfaceSamples& b) {
  double sa = 0.0, sb = 0.0;
  for (const Vec3& p : a.points) sa += brute_nearest(p, b.points);
  for (const Vec3& p : b.points) sb += brute_nearest(p, a.points);
  return 0.5 * sa / a.count() + 0.5 * sb / b.count();
}

inline double brute_normal_consistency(const SurfaceSamples& a, const SurfaceSamples& b) {
  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < a.count(); ++i) {
    std::size_t j = 0;
    brute_nearest(a.points[i], b.points, &j);
    sa += std::abs(a.normals[i].dot(b.normals[j]));
  }
  for (std::size_t i = 0; i < b.count(); ++i) {
    std::size_t j = 0;
    brute_nearest(b.points[i], a.points, &j);
    sb += std::abs(b.normals[i].dot(a.normals[j]));
  }
  return 0.5 * sa / a.count() + 0.5 * sb / b.count();
}

inline double brute_f_score(const SurfaceSamples& a, const SurfaceSamples& b, double eps) {
  std::size_t ra = 0, pb = 0;
  for (const Vec3& p : a.points) ra += brute_nearest(p, b.points) < eps;
  for (const Vec3& p : b.points) pb += brute_nearest(p, a.points) < eps;
  const double r = static_cast<double>(ra) / a.count();
  const double p = static_cast<double>(pb) / b.count();
  return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

/// Point-to-triangle distance by projecting onto the plane and, when the
/// projection falls outside, taking the best of the three edge segments.
inline double brute_point_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const double nn = n.squaredNorm();
  const Vec3 proj = p - n * ((p - a).dot(n) / nn);
  const double w0 = (b - proj).cross(c - proj).dot(n);
  const double w1 = (c - proj).cross(a - proj).dot(n);
  const double w2 = (a - proj).cross(b - proj).dot(n);
  if (w0 >= 0 && w1 >= 0 && w2 >= 0) return (p - proj).norm();
  const auto seg = [&](const Vec3& u, const Vec3& v) {
    const double t = std::clamp((p - u).dot(v - u) / (v - u).squaredNorm(), 0.0, 1.0);
    return (p - (u + t * (v - u))).norm();
  };
  return std::min({seg(a, b), seg(b, c), seg(c, a)});
}

inline double brute_mesh_distance(const TriangleMesh& m, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < m.num_faces(); ++f) {
    best = std::min(best, brute_point_triangle(p, m.corner(f, 0), m.corner(f, 1), m.corner(f, 2)));
  }
  return best;
}

/// Random point set with random unit normals.
inline SurfaceSamples random_samples(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  std::normal_distribution<double> g;
  SurfaceSamples s;
  for (std::size_t i = 0; i < n; ++i) {
    s.points.emplace_back(u(rng), u(rng), u(rng));
    s.normals.push_back(Vec3(g(rng), g(rng), g(rng)).normalized());
  }
  return s;
}

template <typename T>
nn::Tensor4<T> random_tensor(int d, int h, int w, int c, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  nn::Tensor4<T> t(d, h, w, c);
  for (auto& v : t.values) v = static_cast<T>(u(rng));
  return t;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

/// Directional central difference of a scalar function: (f(x + h d) - f(x - h d)) / 2h.
inline double directional_fd(const std::function<double(std::span<const double>)>& f, std::span<const double> x,
                             std::span<const double> dir, double h = 1e-5) {
  std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] += h * dir[i];
    xm[i] -= h * dir[i];
  }
  return (f(xp) - f(xm)) / (2.0 * h);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("ncgs_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace ncgs::testing
