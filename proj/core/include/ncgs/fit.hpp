#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "ncgs/bvh.hpp"
#include "ncgs/grid.hpp"
#include "ncgs/mesh.hpp"

namespace ncgs {

struct FitOptions {
  int max_iter = 500;
  double lr = 0.01;
  double lambda_reg = 10.0;
  /// Cosine decay of the learning rate down to lr * final_lr_fraction.
  double final_lr_fraction = 0.05;
  std::uint64_t seed = 0;
  /// Points sampled on the reference surface for the surface-to-extraction term.
  std::size_t reference_samples = 10000;
  bool optimize_sdf = true;
  bool optimize_deformation = true;
};

struct SurrogateLoss {
  double chamfer = 0.0;      // symmetric point-to-surface distance, in grid cells
  double regularizer = 0.0;  // lambda_reg * mean |deformation|
  double total = 0.0;
};

/// Differentiable fitting objective for a TSDF-Def field against a reference
/// mesh: points on the extracted surface (fixed barycentric pattern per
/// triangle) are matched to their closest points on the reference and vice
/// versa; gradients reach the field through the edge-vertex Jacobians.
class SurrogateObjective {
 public:
  SurrogateObjective(const TriangleMesh& reference, GridSpec grid, double lambda_reg, std::size_t samples,
                     std::uint64_t seed);

  /// Loss for a K^3 x 4 field; fills `grad` (same size) when non-null.
  /// Returns an infinite chamfer when the field has no surface.
  SurrogateLoss evaluate(std::span<const double> field, std::vector<double>* grad) const;

  const GridSpec& grid() const { return grid_; }

 private:
  const TriangleMesh* reference_;
  std::unique_ptr<SpatialIndex> index_;
  GridSpec grid_;
  double lambda_reg_;
  SurfaceSamples samples_;
};

struct FitResult {
  TsdfDefTensor tensor;
  SurrogateLoss initial;
  SurrogateLoss final;
  int best_iteration = 0;
  std::vector<double> history;  // total loss per iteration
};

/// Optimizes channel 0 and the deformation of a TSDF-Def tensor with ADAM,
/// starting from the mesh TSDF. Returns the best iterate seen, so the loss
/// at return never exceeds the loss at initialization.
FitResult fit_tensor(const TriangleMesh& mesh, GridSpec grid, const FitOptions& options);

}  // namespace ncgs
