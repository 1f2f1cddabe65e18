#include "ncgs/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ncgs/error.hpp"

namespace ncgs {

ViewSpec ViewSpec::from_azimuth(double azimuth_deg, double elevation_deg, int size) {
  const double az = azimuth_deg * std::numbers::pi / 180.0;
  const double el = elevation_deg * std::numbers::pi / 180.0;
  const Vec3 eye(std::sin(az) * std::cos(el), std::sin(el), std::cos(az) * std::cos(el));
  ViewSpec view;
  view.direction = -eye;
  // Up is world +y projected onto the image plane.
  const Vec3 world_up(0.0, 1.0, 0.0);
  Vec3 up = world_up - world_up.dot(view.direction) * view.direction;
  view.up = up.norm() > 1e-9 ? up.normalized() : Vec3(0.0, 0.0, -1.0);
  view.height = size;
  view.width = size;
  return view;
}

void ViewSpec::validate() const {
  if (height <= 0 || width <= 0) fail(ErrorCode::kInvalidArgument, "image size must be positive");
  if (std::abs(direction.norm() - 1.0) > 1e-9 || std::abs(up.norm() - 1.0) > 1e-9) {
    fail(ErrorCode::kInvalidArgument, "view vectors must be unit length");
  }
  if (std::abs(direction.dot(up)) > 1e-9) fail(ErrorCode::kInvalidArgument, "view direction must be orthogonal to up");
}

RenderPair render(const TriangleMesh& mesh, const ViewSpec& view) {
  view.validate();
  RenderPair out;
  out.height = view.height;
  out.width = view.width;
  const std::size_t n = static_cast<std::size_t>(view.height) * view.width;
  out.depth.assign(n, 0.0);
  out.silhouette.assign(n, 0);

  const Vec3 forward = view.direction;
  const Vec3 up = view.up;
  const Vec3 right = forward.cross(up);
  const double px = 2.0 / view.width;
  const double py = 2.0 / view.height;

  std::vector<double> zbuf(n, std::numeric_limits<double>::infinity());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    Eigen::Vector2d s[3];
    double z[3];
    for (int k = 0; k < 3; ++k) {
      const Vec3& p = mesh.corner(f, k);
      s[k] = {p.dot(right), p.dot(up)};
      z[k] = p.dot(forward) + ViewSpec::kCameraDistance;
    }
    const double area = (s[1] - s[0]).x() * (s[2] - s[0]).y() - (s[1] - s[0]).y() * (s[2] - s[0]).x();
    if (area == 0.0) continue;

    const double xmin = std::min({s[0].x(), s[1].x(), s[2].x()});
    const double xmax = std::max({s[0].x(), s[1].x(), s[2].x()});
    const double ymin = std::min({s[0].y(), s[1].y(), s[2].y()});
    const double ymax = std::max({s[0].y(), s[1].y(), s[2].y()});
    // Pixel (i, j) center: x = -1 + (j + 0.5) px, y = 1 - (i + 0.5) py.
    const int j0 = std::max(0, static_cast<int>(std::ceil((xmin + 1.0) / px - 0.5)));
    const int j1 = std::min(view.width - 1, static_cast<int>(std::floor((xmax + 1.0) / px - 0.5)));
    const int i0 = std::max(0, static_cast<int>(std::ceil((1.0 - ymax) / py - 0.5)));
    const int i1 = std::min(view.height - 1, static_cast<int>(std::floor((1.0 - ymin) / py - 0.5)));

    for (int i = i0; i <= i1; ++i) {
      const double y = 1.0 - (i + 0.5) * py;
      for (int j = j0; j <= j1; ++j) {
        const double x = -1.0 + (j + 0.5) * px;
        const Eigen::Vector2d q(x, y);
        auto edge = [&](int a, int b) {
          return (s[b] - s[a]).x() * (q - s[a]).y() - (s[b] - s[a]).y() * (q - s[a]).x();
        };
        double w0 = edge(1, 2) / area;
        double w1 = edge(2, 0) / area;
        double w2 = edge(0, 1) / area;
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        const double depth = w0 * z[0] + w1 * z[1] + w2 * z[2];
        const std::size_t idx = static_cast<std::size_t>(i) * view.width + j;
        if (depth < zbuf[idx]) {
          zbuf[idx] = depth;
          out.depth[idx] = depth;
          out.silhouette[idx] = 1;
        }
      }
    }
  }
  return out;
}

ReconError recon_error(const TriangleMesh& reconstructed, const TriangleMesh& reference,
                       const std::vector<ViewSpec>& views, double lambda_rec) {
  if (views.empty()) fail(ErrorCode::kInvalidArgument, "reconstruction error needs at least one view");
  ReconError err;
  for (const ViewSpec& view : views) {
    const RenderPair a = render(reconstructed, view);
    const RenderPair b = render(reference, view);
    for (std::size_t i = 0; i < a.depth.size(); ++i) {
      err.mask += std::abs(static_cast<double>(a.silhouette[i]) - static_cast<double>(b.silhouette[i]));
      err.depth += std::abs((a.depth[i] - b.depth[i]) * b.silhouette[i]);
    }
  }
  err.total = err.mask + lambda_rec * err.depth;
  return err;
}

std::vector<ViewSpec> views_from_azimuths(const std::vector<double>& azimuths_deg, int size) {
  std::vector<ViewSpec> views;
  views.reserve(azimuths_deg.size());
  for (double az : azimuths_deg) views.push_back(ViewSpec::from_azimuth(az, 0.0, size));
  return views;
}

std::vector<ViewSpec> default_views(int size) { return views_from_azimuths({0.0, 90.0, 180.0, 270.0}, size); }

}  // namespace ncgs
