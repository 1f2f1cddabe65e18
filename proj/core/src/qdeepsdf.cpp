#include "ncgs/qdeepsdf.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Core>

#include "ncgs/error.hpp"
#include "ncgs/huffman.hpp"
#include "ncgs/nn.hpp"

namespace ncgs {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

constexpr double kFeatureInitStd = 0.01;
// Container bytes outside the tables and payloads: magic, version, two
// quantizers, the (C, hidden) descriptor, shape count and four offsets.
constexpr std::uint64_t kContainerOverhead = 4 + 1 + 9 + 9 + 4 + 4 + 32;

}  // namespace

std::vector<std::pair<int, int>> QDeepSdfArch::layer_dims() const {
  std::vector<std::pair<int, int>> dims;
  dims.emplace_back(3 + channels, hidden);
  for (int i = 0; i < kLayers - 2; ++i) dims.emplace_back(hidden, hidden);
  dims.emplace_back(hidden, 4);
  return dims;
}

std::size_t QDeepSdfArch::param_count() const {
  std::size_t n = 0;
  for (auto [in, out] : layer_dims()) n += static_cast<std::size_t>(in) * out + out;
  return n;
}

void QDeepSdfArch::validate() const {
  if (channels < 1 || hidden < 1) fail(ErrorCode::kShape, "QuantDeepSDF widths must be positive");
}

template <typename T>
std::vector<T> qdeepsdf_forward(std::span<const T> coords, std::span<const T> feature, std::span<const T> params,
                                const QDeepSdfArch& arch, const std::optional<QuantSpec>& param_quant,
                                QDeepSdfTape<T>* tape) {
  arch.validate();
  if (coords.size() % 3 != 0) fail(ErrorCode::kShape, "coordinates must come in triples");
  if (feature.size() != static_cast<std::size_t>(arch.channels)) fail(ErrorCode::kShape, "feature length mismatch");
  if (params.size() != arch.param_count()) fail(ErrorCode::kShape, "parameter count mismatch");
  const auto rows = static_cast<Eigen::Index>(coords.size() / 3);

  std::vector<T> qp(params.begin(), params.end());
  if (param_quant) quantize_inplace(std::span<T>(qp), *param_quant);

  RowMatrix<T> x(rows, 3 + arch.channels);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (int c = 0; c < 3; ++c) x(r, c) = coords[static_cast<std::size_t>(r) * 3 + c];
    for (int c = 0; c < arch.channels; ++c) x(r, 3 + c) = feature[c];
  }
  if (tape) {
    tape->inputs.clear();
    tape->preacts.clear();
    tape->rows = static_cast<std::size_t>(rows);
  }
  std::size_t offset = 0;
  const auto dims = arch.layer_dims();
  for (std::size_t l = 0; l < dims.size(); ++l) {
    const auto [in, out] = dims[l];
    Eigen::Map<const RowMatrix<T>> w(qp.data() + offset, in, out);
    Eigen::Map<const RowVector<T>> b(qp.data() + offset + static_cast<std::size_t>(in) * out, out);
    offset += static_cast<std::size_t>(in) * out + out;
    RowMatrix<T> h = x * w;
    h.rowwise() += b;
    if (tape) tape->inputs.emplace_back(x.data(), x.data() + x.size());
    if (l + 1 < dims.size()) {
      if (tape) tape->preacts.emplace_back(h.data(), h.data() + h.size());
      x = h.unaryExpr([](T v) { return nn::gelu_value(v); });
    } else {
      x = std::move(h);
    }
  }
  if (tape) tape->params = std::move(qp);
  return std::vector<T>(x.data(), x.data() + x.size());
}

template <typename T>
QDeepSdfGrads<T> qdeepsdf_backward(const QDeepSdfTape<T>& tape, std::span<const T> params,
                                   std::span<const T> grad_output, const QDeepSdfArch& arch,
                                   const std::optional<QuantSpec>& param_quant) {
  const auto dims = arch.layer_dims();
  const auto rows = static_cast<Eigen::Index>(tape.rows);
  if (tape.inputs.size() != dims.size() || grad_output.size() != tape.rows * 4) {
    fail(ErrorCode::kShape, "QuantDeepSDF tape does not match the gradient");
  }
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (auto [in, out] : dims) {
    offsets.push_back(offset);
    offset += static_cast<std::size_t>(in) * out + out;
  }

  QDeepSdfGrads<T> grads;
  grads.params.assign(params.size(), T(0));
  RowMatrix<T> g = Eigen::Map<const RowMatrix<T>>(grad_output.data(), rows, 4);
  for (std::size_t l = dims.size(); l-- > 0;) {
    const auto [in, out] = dims[l];
    if (l + 1 < dims.size()) {
      Eigen::Map<const RowMatrix<T>> pre(tape.preacts[l].data(), rows, out);
      g = g.cwiseProduct(pre.unaryExpr([](T v) { return nn::gelu_derivative(v); }));
    }
    Eigen::Map<const RowMatrix<T>> x(tape.inputs[l].data(), rows, in);
    Eigen::Map<RowMatrix<T>> gw(grads.params.data() + offsets[l], in, out);
    Eigen::Map<RowVector<T>> gb(grads.params.data() + offsets[l] + static_cast<std::size_t>(in) * out, out);
    gw.noalias() = x.transpose() * g;
    gb.setZero();
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      for (Eigen::Index c = 0; c < g.cols(); ++c) gb(c) += g(r, c);
    }
    Eigen::Map<const RowMatrix<T>> w(tape.params.data() + offsets[l], in, out);
    RowMatrix<T> gx = g * w.transpose();
    g = std::move(gx);
  }
  grads.feature.assign(arch.channels, T(0));
  for (Eigen::Index r = 0; r < g.rows(); ++r) {
    for (int c = 0; c < arch.channels; ++c) grads.feature[c] += g(r, 3 + c);
  }
  if (param_quant) nn::ste_quantize_backward(params, std::span<T>(grads.params), *param_quant);
  return grads;
}

template std::vector<float> qdeepsdf_forward<float>(std::span<const float>, std::span<const float>,
                                                    std::span<const float>, const QDeepSdfArch&,
                                                    const std::optional<QuantSpec>&, QDeepSdfTape<float>*);
template std::vector<double> qdeepsdf_forward<double>(std::span<const double>, std::span<const double>,
                                                      std::span<const double>, const QDeepSdfArch&,
                                                      const std::optional<QuantSpec>&, QDeepSdfTape<double>*);
template QDeepSdfGrads<float> qdeepsdf_backward<float>(const QDeepSdfTape<float>&, std::span<const float>,
                                                       std::span<const float>, const QDeepSdfArch&,
                                                       const std::optional<QuantSpec>&);
template QDeepSdfGrads<double> qdeepsdf_backward<double>(const QDeepSdfTape<double>&, std::span<const double>,
                                                         std::span<const double>, const QDeepSdfArch&,
                                                         const std::optional<QuantSpec>&);

QDeepSdfModel train_qdeepsdf(std::span<const TsdfDefTensor> tensors, const QDeepSdfArch& arch,
                             const QDeepSdfConfig& cfg) {
  arch.validate();
  cfg.feature_quant.validate();
  cfg.param_quant.validate();
  if (tensors.empty()) fail(ErrorCode::kInvalidArgument, "no tensors to train on");
  if (cfg.batch < 2 || cfg.epochs < 0 || !(cfg.lr > 0.0)) fail(ErrorCode::kInvalidArgument, "invalid QuantDeepSDF config");
  const GridSpec grid = tensors.front().grid;
  for (const TsdfDefTensor& t : tensors) {
    if (!(t.grid == grid)) fail(ErrorCode::kShape, "training tensors have inconsistent K");
  }

  QDeepSdfModel model;
  model.arch = arch;
  model.feature_quant = cfg.feature_quant;
  model.param_quant = cfg.param_quant;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<float> normal(0.0f, static_cast<float>(kFeatureInitStd));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    std::vector<float> f(arch.channels);
    for (float& v : f) v = normal(rng);
    model.features.push_back(std::move(f));
  }
  model.params.resize(arch.param_count());
  std::size_t offset = 0;
  for (auto [in, out] : arch.layer_dims()) {
    const auto bound = static_cast<float>(1.0 / std::sqrt(static_cast<double>(in)));
    std::uniform_real_distribution<float> uniform(-bound, bound);
    const std::size_t n = static_cast<std::size_t>(in) * out + out;
    for (std::size_t i = 0; i < n; ++i) model.params[offset + i] = uniform(rng);
    offset += n;
  }

  // Near-surface candidates per shape.
  std::vector<std::vector<std::uint32_t>> near(tensors.size());
  for (std::size_t s = 0; s < tensors.size(); ++s) {
    for (std::uint32_t p = 0; p < grid.num_points(); ++p) {
      if (std::abs(tensors[s].data[p * 4]) < cfg.tau) near[s].push_back(p);
    }
  }

  nn::AdamState<float> param_adam(model.params.size(), cfg.lr);
  std::vector<nn::AdamState<float>> feature_adam(tensors.size(), nn::AdamState<float>(arch.channels, cfg.lr));
  const int k = grid.resolution;
  std::uniform_int_distribution<std::uint32_t> any_point(0, static_cast<std::uint32_t>(grid.num_points() - 1));
  std::vector<float> coords(static_cast<std::size_t>(cfg.batch) * 3);
  std::vector<float> targets(static_cast<std::size_t>(cfg.batch) * 4);
  std::vector<float> grad(targets.size());
  QDeepSdfTape<float> tape;
  std::vector<std::size_t> order(tensors.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t s : order) {
      for (int b = 0; b < cfg.batch; ++b) {
        std::uint32_t p = any_point(rng);
        if (b % 2 == 1 && !near[s].empty()) {
          p = near[s][std::uniform_int_distribution<std::size_t>(0, near[s].size() - 1)(rng)];
        }
        const int u = static_cast<int>(p / (static_cast<std::uint32_t>(k) * k));
        const int v = static_cast<int>((p / k) % k);
        const int w = static_cast<int>(p % k);
        const Vec3 pos = grid.position(u, v, w);
        for (int c = 0; c < 3; ++c) coords[b * 3 + c] = static_cast<float>(pos[c]);
        for (int c = 0; c < 4; ++c) targets[b * 4 + c] = tensors[s].data[p * 4 + c];
      }
      std::vector<float> qf = quantize(std::span<const float>(model.features[s]), cfg.feature_quant);
      const std::vector<float> out = qdeepsdf_forward<float>(coords, qf, model.params, arch, cfg.param_quant, &tape);
      double loss = 0.0;
      const float scale = 1.0f / static_cast<float>(out.size());
      for (std::size_t i = 0; i < out.size(); ++i) {
        const float d = out[i] - targets[i];
        loss += std::abs(d);
        grad[i] = d > 0.0f ? scale : (d < 0.0f ? -scale : 0.0f);
      }
      epoch_loss += loss / static_cast<double>(out.size());
      QDeepSdfGrads<float> g = qdeepsdf_backward<float>(tape, model.params, grad, arch, cfg.param_quant);
      nn::ste_quantize_backward(std::span<const float>(model.features[s]), std::span<float>(g.feature),
                                cfg.feature_quant);
      nn::adam_step(std::span<float>(model.params), std::span<const float>(g.params), param_adam);
      nn::adam_step(std::span<float>(model.features[s]), std::span<const float>(g.feature), feature_adam[s]);
      for (float& v : model.features[s]) v = std::clamp(v, -1.0f, 1.0f);
    }
    model.history.push_back(epoch_loss / static_cast<double>(tensors.size()));
  }
  return model;
}

TsdfDefTensor qdeepsdf_decode(const QDeepSdfModel& model, std::size_t shape, GridSpec grid) {
  if (shape >= model.features.size()) fail(ErrorCode::kInvalidArgument, "shape index out of range");
  const std::vector<float> qf = quantize(std::span<const float>(model.features[shape]), model.feature_quant);
  TsdfDefTensor out(grid);
  const int k = grid.resolution;
  std::vector<float> coords(static_cast<std::size_t>(k) * k * 3);
  for (int u = 0; u < k; ++u) {
    std::size_t i = 0;
    for (int v = 0; v < k; ++v) {
      for (int w = 0; w < k; ++w) {
        const Vec3 p = grid.position(u, v, w);
        for (int c = 0; c < 3; ++c) coords[i++] = static_cast<float>(p[c]);
      }
    }
    const std::vector<float> slab = qdeepsdf_forward<float>(coords, qf, model.params, model.arch, model.param_quant);
    const std::size_t base = grid.point_index(u, 0, 0) * 4;
    for (std::size_t j = 0; j < slab.size(); ++j) out.data[base + j] = std::clamp(slab[j], -1.0f, 1.0f);
  }
  return out;
}

double qdeepsdf_mae(const QDeepSdfModel& model, std::size_t shape, const TsdfDefTensor& target) {
  const TsdfDefTensor decoded = qdeepsdf_decode(model, shape, target.grid);
  double sum = 0.0;
  for (std::size_t i = 0; i < target.data.size(); ++i) sum += std::abs(static_cast<double>(decoded.data[i]) - target.data[i]);
  return sum / static_cast<double>(target.data.size());
}

std::uint64_t qdeepsdf_compressed_bytes(const QDeepSdfModel& model) {
  std::vector<float> features;
  for (const auto& f : model.features) {
    const std::vector<float> q = quantize(std::span<const float>(f), model.feature_quant);
    features.insert(features.end(), q.begin(), q.end());
  }
  const std::vector<float> params = quantize(std::span<const float>(model.params), model.param_quant);
  auto coded = [](std::span<const float> values, const QuantSpec& q) {
    const std::vector<std::uint32_t> levels = to_levels(values, q);
    const HuffmanTable table = huffman_build(histogram(levels, q.num_levels()));
    return static_cast<std::uint64_t>(q.num_levels()) + huffman_encode(levels, table).size();
  };
  return kContainerOverhead + coded(features, model.feature_quant) + coded(params, model.param_quant);
}

}  // namespace ncgs
