#pragma once

#include <cstdint>
#include <vector>

#include "ncgs/mesh.hpp"

namespace ncgs {

/// Orthographic camera looking along `direction` over the window [-1, 1]^2.
/// Depth is measured from a camera plane placed kCameraDistance behind the
/// origin, so surfaces in [-1, 1]^3 have strictly positive depth.
struct ViewSpec {
  static constexpr double kCameraDistance = 2.0;

  Vec3 direction = Vec3(0.0, 0.0, -1.0);
  Vec3 up = Vec3(0.0, 1.0, 0.0);
  int height = 256;
  int width = 256;

  /// Camera on the horizontal circle at `azimuth_deg`, looking at the origin.
  static ViewSpec from_azimuth(double azimuth_deg, double elevation_deg = 0.0, int size = 256);
  void validate() const;
};

struct RenderPair {
  int height = 0;
  int width = 0;
  std::vector<double> depth;        // 0 where nothing was drawn
  std::vector<std::uint8_t> silhouette;
};

RenderPair render(const TriangleMesh& mesh, const ViewSpec& view);

struct ReconError {
  double mask = 0.0;   // sum of |silhouette difference|
  double depth = 0.0;  // sum of |depth difference| under the reference silhouette
  double total = 0.0;  // mask + lambda * depth
};

/// Rendering-based discrepancy between `reconstructed` and `reference`.
/// Depth error is masked by the reference silhouette only.
ReconError recon_error(const TriangleMesh& reconstructed, const TriangleMesh& reference,
                       const std::vector<ViewSpec>& views, double lambda_rec = 10.0);

/// Four azimuths 0/90/180/270 degrees, elevation 0.
std::vector<ViewSpec> default_views(int size = 256);
std::vector<ViewSpec> views_from_azimuths(const std::vector<double>& azimuths_deg, int size = 256);

}  // namespace ncgs
