#include "ncgs/primitives.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "ncgs/dmc.hpp"
#include "ncgs/error.hpp"

namespace ncgs {

namespace sdf {

double sphere(const Vec3& p, const Vec3& center, double radius) { return (p - center).norm() - radius; }

double box(const Vec3& p, const Vec3& center, const Vec3& half_extent) {
  const Vec3 q = (p - center).cwiseAbs() - half_extent;
  return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
}

double torus(const Vec3& p, const Vec3& center, double major, double minor) {
  const Vec3 d = p - center;
  const double ring = std::hypot(d.x(), d.z()) - major;
  return std::hypot(ring, d.y()) - minor;
}

double capsule(const Vec3& p, const Vec3& a, const Vec3& b, double radius) {
  const Vec3 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (p - (a + t * ab)).norm() - radius;
}

}  // namespace sdf

TriangleMesh mesh_from_sdf(const SdfFunction& f, int resolution) {
  const GridSpec grid(resolution);
  std::vector<double> field(grid.num_points() * 4, 0.0);
  for (int u = 0; u < resolution; ++u)
    for (int v = 0; v < resolution; ++v)
      for (int w = 0; w < resolution; ++w) {
        field[grid.point_index(u, v, w) * 4] = f(grid.position(u, v, w));
      }
  TriangleMesh mesh = dmc_extract_field(grid, std::span<const double>(field)).mesh;
  // Drop slivers produced when a vertex coincides with a lattice corner.
  std::erase_if(mesh.faces, [&](const Face& face) {
    const Vec3 a = mesh.vertices[face[0]];
    return (mesh.vertices[face[1]] - a).cross(mesh.vertices[face[2]] - a).squaredNorm() == 0.0;
  });
  return mesh;
}

TriangleMesh uv_sphere(double radius, int stacks, int slices, const Vec3& center) {
  if (stacks < 2 || slices < 3) fail(ErrorCode::kInvalidArgument, "uv sphere needs >= 2 stacks and >= 3 slices");
  TriangleMesh mesh;
  mesh.vertices.push_back(center + Vec3(0.0, radius, 0.0));
  for (int i = 1; i < stacks; ++i) {
    const double theta = std::numbers::pi * i / stacks;
    for (int j = 0; j < slices; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / slices;
      mesh.vertices.push_back(center + radius * Vec3(std::sin(theta) * std::cos(phi), std::cos(theta),
                                                     std::sin(theta) * std::sin(phi)));
    }
  }
  mesh.vertices.push_back(center + Vec3(0.0, -radius, 0.0));
  const int bottom = static_cast<int>(mesh.vertices.size()) - 1;
  auto ring = [&](int i, int j) { return 1 + (i - 1) * slices + (j % slices); };
  // Outward winding: (a, b, c) with (b - a) x (c - a) pointing away from center.
  for (int j = 0; j < slices; ++j) mesh.faces.push_back({0, ring(1, j + 1), ring(1, j)});
  for (int i = 1; i + 1 < stacks; ++i) {
    for (int j = 0; j < slices; ++j) {
      mesh.faces.push_back({ring(i, j), ring(i, j + 1), ring(i + 1, j)});
      mesh.faces.push_back({ring(i, j + 1), ring(i + 1, j + 1), ring(i + 1, j)});
    }
  }
  for (int j = 0; j < slices; ++j) mesh.faces.push_back({bottom, ring(stacks - 1, j), ring(stacks - 1, j + 1)});
  return mesh;
}

std::vector<AnalyticShape> desk_shapes() {
  using sdf::box;
  using sdf::capsule;
  using sdf::sphere;
  using sdf::torus;
  std::vector<AnalyticShape> shapes;
  shapes.push_back({"s0_sphere", [](const Vec3& p) { return sphere(p, Vec3::Zero(), 0.7); }});
  shapes.push_back({"s1_torus", [](const Vec3& p) {
                      const Eigen::AngleAxisd tilt(0.4, Vec3::UnitX());
                      return torus(tilt.inverse() * p, Vec3::Zero(), 0.55, 0.22);
                    }});
  shapes.push_back({"s2_box", [](const Vec3& p) { return box(p, Vec3::Zero(), Vec3(0.6, 0.45, 0.35)); }});
  shapes.push_back(
      {"s3_capsule", [](const Vec3& p) { return capsule(p, Vec3(-0.5, -0.1, 0.0), Vec3(0.5, 0.1, 0.0), 0.3); }});
  shapes.push_back({"s4_sphere_box", [](const Vec3& p) {
                      return std::min(sphere(p, Vec3(-0.3, 0.0, 0.0), 0.45),
                                      box(p, Vec3(0.35, 0.0, 0.0), Vec3(0.3, 0.3, 0.3)));
                    }});
  shapes.push_back({"s5_torus_capsule", [](const Vec3& p) {
                      return std::min(torus(p, Vec3::Zero(), 0.5, 0.15),
                                      capsule(p, Vec3(0.0, -0.6, 0.0), Vec3(0.0, 0.6, 0.0), 0.18));
                    }});
  shapes.push_back({"s6_two_spheres", [](const Vec3& p) {
                      return std::min(sphere(p, Vec3(-0.35, 0.1, 0.0), 0.4), sphere(p, Vec3(0.35, -0.1, 0.0), 0.4));
                    }});
  shapes.push_back({"s7_slab_capsule", [](const Vec3& p) {
                      return std::min(box(p, Vec3(0.0, -0.2, 0.0), Vec3(0.5, 0.15, 0.5)),
                                      capsule(p, Vec3(-0.4, -0.2, -0.4), Vec3(0.4, 0.5, 0.4), 0.2));
                    }});
  return shapes;
}

AnalyticShape thin_plate_shape() {
  return {"thin_plate", [](const Vec3& p) {
            const Eigen::Matrix3d r =
                (Eigen::AngleAxisd(0.35, Vec3::UnitZ()) * Eigen::AngleAxisd(0.25, Vec3::UnitX())).toRotationMatrix();
            return sdf::box(r.transpose() * p, Vec3(0.01, 0.013, 0.0), Vec3(0.65, 0.04, 0.5));
          }};
}

}  // namespace ncgs
