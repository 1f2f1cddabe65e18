#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ncgs/mesh.hpp"

namespace ncgs {

using SdfFunction = std::function<double(const Vec3&)>;

struct AnalyticShape {
  std::string name;
  SdfFunction sdf;
};

namespace sdf {
double sphere(const Vec3& p, const Vec3& center, double radius);
double box(const Vec3& p, const Vec3& center, const Vec3& half_extent);
double torus(const Vec3& p, const Vec3& center, double major, double minor);
double capsule(const Vec3& p, const Vec3& a, const Vec3& b, double radius);
}  // namespace sdf

/// Watertight mesh of the zero level set, extracted on a regular grid over
/// [-1, 1]^3.
TriangleMesh mesh_from_sdf(const SdfFunction& f, int resolution);

/// Latitude/longitude sphere; every vertex lies exactly on the sphere.
TriangleMesh uv_sphere(double radius, int stacks, int slices, const Vec3& center = Vec3::Zero());

/// Sphere, torus, box, capsule and four unions of them.
std::vector<AnalyticShape> desk_shapes();

/// Tilted plate roughly one coarse grid cell thick.
AnalyticShape thin_plate_shape();

}  // namespace ncgs
