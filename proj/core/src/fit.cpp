#include "ncgs/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ncgs/dmc.hpp"
#include "ncgs/error.hpp"
#include "ncgs/nn.hpp"

namespace ncgs {

namespace {

// Fixed barycentric sample pattern per extracted triangle.
constexpr double kPattern[4][3] = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
                                   {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
                                   {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
                                   {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}};
constexpr double kDistanceFloor = 1e-12;

}  // namespace

SurrogateObjective::SurrogateObjective(const TriangleMesh& reference, GridSpec grid, double lambda_reg,
                                       std::size_t samples, std::uint64_t seed)
    : reference_(&reference),
      index_(std::make_unique<SpatialIndex>(reference)),
      grid_(grid),
      lambda_reg_(lambda_reg),
      samples_(sample_surface(reference, samples, seed)) {}

SurrogateLoss SurrogateObjective::evaluate(std::span<const double> field, std::vector<double>* grad) const {
  if (field.size() != grid_.num_points() * 4) fail(ErrorCode::kShape, "field size does not match grid");
  SurrogateLoss loss;
  if (grad) grad->assign(field.size(), 0.0);

  const std::size_t n_def = grid_.num_points() * 3;
  double def_l1 = 0.0;
  for (std::size_t i = 0; i < grid_.num_points(); ++i) {
    for (int c = 1; c < 4; ++c) {
      const double d = field[i * 4 + c];
      def_l1 += std::abs(d);
      if (grad && d != 0.0) (*grad)[i * 4 + c] += lambda_reg_ * (d > 0.0 ? 1.0 : -1.0) / static_cast<double>(n_def);
    }
  }
  loss.regularizer = lambda_reg_ * def_l1 / static_cast<double>(n_def);

  const DmcResult dmc = dmc_extract_field(grid_, field);
  const TriangleMesh& mesh = dmc.mesh;
  double area_sum = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) area_sum += mesh.face_area(f);
  if (mesh.faces.empty() || !(area_sum > 0.0)) {
    loss.chamfer = std::numeric_limits<double>::infinity();
    loss.total = loss.chamfer;
    return loss;
  }

  const double inv_h = 1.0 / grid_.spacing();
  std::vector<Vec3> vgrad(grad ? mesh.vertices.size() : 0, Vec3::Zero());

  // Extracted surface -> reference, area weighted.
  double forward = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const double area = mesh.face_area(f);
    if (area == 0.0) continue;
    const double weight = area / (area_sum * 4.0);
    for (const auto& b : kPattern) {
      const Vec3 p = b[0] * mesh.corner(f, 0) + b[1] * mesh.corner(f, 1) + b[2] * mesh.corner(f, 2);
      const ClosestHit hit = index_->closest_point(p);
      forward += weight * hit.distance;
      if (grad && hit.distance > kDistanceFloor) {
        const Vec3 dir = (p - hit.point) / hit.distance;
        for (int k = 0; k < 3; ++k) vgrad[mesh.faces[f][k]] += (0.5 * inv_h * weight * b[k]) * dir;
      }
    }
  }

  // Reference samples -> extracted surface.
  const SpatialIndex dmc_index(mesh);
  double backward = 0.0;
  const double inv_m = 1.0 / static_cast<double>(samples_.count());
  for (const Vec3& q : samples_.points) {
    const ClosestHit hit = dmc_index.closest_point(q);
    backward += inv_m * hit.distance;
    if (grad && hit.distance > kDistanceFloor) {
      const Vec3 dir = (hit.point - q) / hit.distance;
      for (int k = 0; k < 3; ++k) {
        vgrad[mesh.faces[hit.triangle][k]] += (0.5 * inv_h * inv_m * hit.barycentric[k]) * dir;
      }
    }
  }
  loss.chamfer = 0.5 * (forward + backward) * inv_h;
  loss.total = loss.chamfer + loss.regularizer;

  if (grad) {
    std::vector<double>& g = *grad;
    for (std::size_t vi = 0; vi < mesh.vertices.size(); ++vi) {
      const LatticeEdge& e = dmc.vertex_edges[vi];
      const std::size_t ia = grid_.point_index(e.u, e.v, e.w) * 4;
      const std::size_t ib = grid_.point_index(e.u + (e.axis == 0), e.v + (e.axis == 1), e.w + (e.axis == 2)) * 4;
      EdgeValues ev;
      ev.sdf_a = field[ia];
      ev.sdf_b = field[ib];
      ev.pos_a = grid_.position(e.u, e.v, e.w);
      ev.pos_b = grid_.position(e.u + (e.axis == 0), e.v + (e.axis == 1), e.w + (e.axis == 2));
      ev.def_a = Vec3(field[ia + 1], field[ia + 2], field[ia + 3]);
      ev.def_b = Vec3(field[ib + 1], field[ib + 2], field[ib + 3]);
      ev.deform_scale = grid_.deform_scale();
      const EdgeJacobian j = edge_vertex_jacobian(ev);
      const Vec3& gv = vgrad[vi];
      g[ia] += gv.dot(j.dvertex_dsdf_a);
      g[ib] += gv.dot(j.dvertex_dsdf_b);
      for (int c = 0; c < 3; ++c) {
        g[ia + 1 + c] += gv[c] * j.dvertex_ddef_a;
        g[ib + 1 + c] += gv[c] * j.dvertex_ddef_b;
      }
    }
  }
  return loss;
}

FitResult fit_tensor(const TriangleMesh& mesh, GridSpec grid, const FitOptions& options) {
  if (options.max_iter < 1) fail(ErrorCode::kInvalidArgument, "max_iter must be positive");
  if (!(options.lr > 0.0)) fail(ErrorCode::kInvalidArgument, "learning rate must be positive");
  if (options.lambda_reg < 0.0) fail(ErrorCode::kInvalidArgument, "lambda_reg must be non-negative");

  const TsdfDefTensor init = init_tsdf_def(mesh, grid);
  const SurrogateObjective objective(mesh, grid, options.lambda_reg, options.reference_samples, options.seed);

  std::vector<double> field(init.data.begin(), init.data.end());
  std::vector<double> grad;
  nn::AdamState<double> adam(field.size(), options.lr);

  FitResult result;
  result.initial = objective.evaluate(field, &grad);
  if (!std::isfinite(result.initial.total)) {
    fail(ErrorCode::kNoSurface, "mesh has no extractable surface at K=" + std::to_string(grid.resolution));
  }
  SurrogateLoss best_loss = result.initial;
  std::vector<double> best = field;
  result.history.reserve(options.max_iter + 1);
  result.history.push_back(result.initial.total);

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    for (std::size_t i = 0; i < grad.size(); i += 4) {
      if (!options.optimize_sdf) grad[i] = 0.0;
      if (!options.optimize_deformation) grad[i + 1] = grad[i + 2] = grad[i + 3] = 0.0;
    }
    const double progress = static_cast<double>(iter - 1) / options.max_iter;
    adam.lr = options.lr * (options.final_lr_fraction +
                            (1.0 - options.final_lr_fraction) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
    nn::adam_step(std::span<double>(field), std::span<const double>(grad), adam);
    for (double& v : field) v = std::clamp(v, -1.0, 1.0);

    const SurrogateLoss loss = objective.evaluate(field, &grad);
    result.history.push_back(loss.total);
    if (!std::isfinite(loss.total)) break;
    if (loss.total < best_loss.total) {
      best_loss = loss;
      best = field;
      result.best_iteration = iter;
    }
  }

  result.tensor = TsdfDefTensor(grid);
  std::transform(best.begin(), best.end(), result.tensor.data.begin(),
                 [](double v) { return static_cast<float>(v); });
  std::vector<double> rounded(result.tensor.data.begin(), result.tensor.data.end());
  result.final = objective.evaluate(rounded, nullptr);
  if (!(result.final.total <= result.initial.total)) {
    result.tensor = init;
    result.final = result.initial;
    result.best_iteration = 0;
  }
  return result;
}

}  // namespace ncgs
