#include "ncgs/train.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "ncgs/error.hpp"

namespace ncgs {

namespace {

constexpr double kFeatureInitStd = 0.01;

bool in_mask(double target_sdf, double tau) { return tau >= 1.0 || std::abs(target_sdf) < tau; }

std::uint64_t epoch_seed(std::uint64_t seed, int epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

void clamp_unit(std::span<float> v) {
  for (float& x : v) x = std::clamp(x, -1.0f, 1.0f);
}

// Loss of one shape plus its decoder gradients.
double shape_step(std::span<const float> feature, std::span<const float> params, const nn::Tensor4<float>& target,
                  const DecoderArch& arch, const TrainConfig& cfg, bool need_param_grad,
                  DecoderGrads<float>& grads) {
  DecoderTape<float> tape;
  const DecoderQuant quant = cfg.decoder_quant();
  const nn::Tensor4<float> pred = decoder_forward(feature, params, arch, quant, &tape);
  const LossResult<float> loss = regression_loss(pred, target, cfg, true);
  grads = decoder_backward(tape, feature, params, loss.grad, arch, quant, need_param_grad);
  return loss.total;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) fail(ErrorCode::kInvalidArgument, "loss weights must be non-negative");
  if (!(tau > 0.0)) fail(ErrorCode::kInvalidArgument, "mask threshold tau must be positive");
  if (epochs < 0) fail(ErrorCode::kInvalidArgument, "epochs must be non-negative");
  if (!(lr > 0.0)) fail(ErrorCode::kInvalidArgument, "learning rate must be positive");
  if (!(lr_final_fraction > 0.0 && lr_final_fraction <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "lr_final_fraction must lie in (0, 1]");
  }
  if (lr_horizon < 0) fail(ErrorCode::kInvalidArgument, "lr_horizon must be non-negative");
  feature_quant.validate();
  param_quant.validate();
}

double TrainConfig::lr_at(int epoch) const {
  const int horizon = lr_horizon > 0 ? lr_horizon : epochs;
  if (lr_final_fraction == 1.0 || horizon <= 1) return lr;
  const double progress = std::clamp(static_cast<double>(epoch - 1) / (horizon - 1), 0.0, 1.0);
  return lr * (lr_final_fraction + (1.0 - lr_final_fraction) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
}

template <typename T>
LossResult<T> regression_loss(const nn::Tensor4<T>& predicted, const nn::Tensor4<T>& target, const TrainConfig& cfg,
                              bool want_grad) {
  if (!predicted.same_dims(target)) fail(ErrorCode::kShape, "prediction and target differ in shape");
  if (target.c != TsdfDefTensor::kChannels) fail(ErrorCode::kShape, "regression loss expects 4 channels");
  const std::size_t n = predicted.size();
  const std::size_t points = predicted.voxels();

  std::size_t masked_points = 0;
  double sum = 0.0;
  double masked_sum = 0.0;
  for (std::size_t p = 0; p < points; ++p) {
    const bool m = in_mask(static_cast<double>(target.values[p * 4]), cfg.tau);
    masked_points += m;
    for (std::size_t c = 0; c < 4; ++c) {
      const double d = std::abs(static_cast<double>(predicted.values[p * 4 + c]) - target.values[p * 4 + c]);
      sum += d;
      if (m) masked_sum += d;
    }
  }
  const std::size_t masked_count = masked_points * 4;

  LossResult<T> out;
  out.l1 = sum / static_cast<double>(n);
  out.masked_l1 = masked_count ? masked_sum / static_cast<double>(masked_count) : 0.0;
  const nn::SsimResult<T> ssim = nn::ssim3d(predicted, target, want_grad && cfg.lambda2 != 0.0);
  out.ssim = static_cast<double>(ssim.value);
  out.total = out.l1 + cfg.lambda1 * out.masked_l1 + cfg.lambda2 * (1.0 - out.ssim);

  if (want_grad) {
    out.grad = nn::Tensor4<T>(predicted.d, predicted.h, predicted.w, predicted.c);
    const T w_all = static_cast<T>(1.0 / static_cast<double>(n));
    const T w_mask = masked_count ? static_cast<T>(cfg.lambda1 / static_cast<double>(masked_count)) : T(0);
    for (std::size_t p = 0; p < points; ++p) {
      const bool m = in_mask(static_cast<double>(target.values[p * 4]), cfg.tau);
      for (std::size_t c = 0; c < 4; ++c) {
        const std::size_t i = p * 4 + c;
        const T diff = predicted.values[i] - target.values[i];
        const T sign = diff > T(0) ? T(1) : (diff < T(0) ? T(-1) : T(0));
        out.grad.values[i] = sign * (w_all + (m ? w_mask : T(0)));
      }
    }
    if (cfg.lambda2 != 0.0) {
      const T w_ssim = static_cast<T>(cfg.lambda2);
      for (std::size_t i = 0; i < n; ++i) out.grad.values[i] -= w_ssim * ssim.grad_x.values[i];
    }
  }
  return out;
}

template LossResult<float> regression_loss<float>(const nn::Tensor4<float>&, const nn::Tensor4<float>&,
                                                  const TrainConfig&, bool);
template LossResult<double> regression_loss<double>(const nn::Tensor4<double>&, const nn::Tensor4<double>&,
                                                    const TrainConfig&, bool);

double masked_mae(const TsdfDefTensor& predicted, const TsdfDefTensor& target, double tau) {
  if (!(predicted.grid == target.grid)) fail(ErrorCode::kShape, "tensors differ in resolution");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < target.grid.num_points(); ++p) {
    if (!in_mask(target.data[p * 4], tau)) continue;
    for (std::size_t c = 0; c < 4; ++c) sum += std::abs(static_cast<double>(predicted.data[p * 4 + c]) - target.data[p * 4 + c]);
    count += 4;
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

std::vector<float> init_feature(const DecoderArch& arch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, static_cast<float>(kFeatureInitStd));
  std::vector<float> f(arch.feature_size());
  for (float& v : f) v = normal(rng);
  return f;
}

ModelState init_model(const DecoderArch& arch, std::size_t shapes, const TrainConfig& cfg) {
  arch.validate();
  cfg.validate();
  ModelState state;
  state.arch = arch;
  state.feature_quant = cfg.feature_quant;
  state.param_quant = cfg.param_quant;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<float> normal(0.0f, static_cast<float>(kFeatureInitStd));
  state.features.resize(shapes);
  for (auto& f : state.features) {
    f.resize(arch.feature_size());
    for (float& v : f) v = normal(rng);
  }
  state.params.resize(arch.param_count());
  for (const LayerSlice& l : layer_slices(arch)) {
    const double fan_in = static_cast<double>(l.spec.weight_count()) / l.spec.out_channels;
    const auto bound = static_cast<float>(1.0 / std::sqrt(fan_in));
    std::uniform_real_distribution<float> uniform(-bound, bound);
    const std::size_t end = l.bias + static_cast<std::size_t>(l.spec.out_channels);
    for (std::size_t i = l.weights; i < end; ++i) state.params[i] = uniform(rng);
  }
  state.param_adam = nn::AdamState<float>(state.params.size(), cfg.lr);
  state.feature_adam.assign(shapes, nn::AdamState<float>(arch.feature_size(), cfg.lr));
  for (std::size_t i = 0; i < shapes; ++i) state.names.push_back("shape_" + std::to_string(i));
  state.source_bytes.assign(shapes, 0);
  return state;
}

void train_epochs(ModelState& state, std::span<const TsdfDefTensor> targets, const TrainConfig& cfg, int epochs,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (targets.size() != state.size()) {
    fail(ErrorCode::kShape, std::to_string(targets.size()) + " target tensors for " + std::to_string(state.size()) +
                                " features");
  }
  if (targets.empty()) fail(ErrorCode::kInvalidArgument, "no tensors to train on");
  const int k = targets.front().grid.resolution;
  for (const TsdfDefTensor& t : targets) {
    if (t.grid.resolution != k) fail(ErrorCode::kShape, "training tensors have inconsistent K");
  }
  state.arch.validate_for(k);
  if (!(cfg.feature_quant == state.feature_quant) || !(cfg.param_quant == state.param_quant)) {
    fail(ErrorCode::kInvalidArgument, "quantizer settings differ from the model state");
  }

  std::vector<nn::Tensor4<float>> target_tensors;
  target_tensors.reserve(targets.size());
  for (const TsdfDefTensor& t : targets) target_tensors.push_back(as_tensor4(t));

  std::vector<std::size_t> order(targets.size());
  DecoderGrads<float> grads;
  for (int e = 0; e < epochs; ++e) {
    const int epoch = state.epoch + 1;
    state.param_adam.lr = cfg.lr_at(epoch);
    for (auto& a : state.feature_adam) a.lr = state.param_adam.lr;
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(epoch_seed(cfg.seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double sum = 0.0;
    for (std::size_t i : order) {
      sum += shape_step(state.features[i], state.params, target_tensors[i], state.arch, cfg, true, grads);
      nn::adam_step(std::span<float>(state.features[i]), std::span<const float>(grads.feature),
                    state.feature_adam[i]);
      clamp_unit(state.features[i]);
      nn::adam_step(std::span<float>(state.params), std::span<const float>(grads.params), state.param_adam);
    }
    const double mean = sum / static_cast<double>(order.size());
    state.history.push_back(mean);
    state.epoch = epoch;
    if (on_epoch) on_epoch(epoch, mean);
  }
}

ModelState train_set(std::span<const TsdfDefTensor> targets, const DecoderArch& arch, const TrainConfig& cfg,
                     const EpochCallback& on_epoch) {
  ModelState state = init_model(arch, targets.size(), cfg);
  train_epochs(state, targets, cfg, cfg.epochs, on_epoch);
  return state;
}

std::vector<float> fit_new_feature(const TsdfDefTensor& target, std::span<const float> frozen_params,
                                   const DecoderArch& arch, const TrainConfig& cfg, std::vector<double>* history) {
  cfg.validate();
  arch.validate_for(target.grid.resolution);
  if (frozen_params.size() != arch.param_count()) fail(ErrorCode::kShape, "parameter count does not match architecture");

  const nn::Tensor4<float> t = as_tensor4(target);
  std::vector<float> feature = init_feature(arch, cfg.seed);
  nn::AdamState<float> adam(feature.size(), cfg.lr);
  DecoderGrads<float> grads;
  for (int e = 0; e < cfg.epochs; ++e) {
    const double loss = shape_step(feature, frozen_params, t, arch, cfg, false, grads);
    if (history) history->push_back(loss);
    adam.lr = cfg.lr_at(e + 1);
    nn::adam_step(std::span<float>(feature), std::span<const float>(grads.feature), adam);
    clamp_unit(feature);
  }
  return feature;
}

TsdfDefTensor decode_feature(std::span<const float> feature, std::span<const float> params, const DecoderArch& arch,
                             const DecoderQuant& quant) {
  return as_tsdf(decoder_forward(feature, params, arch, quant));
}

}  // namespace ncgs
