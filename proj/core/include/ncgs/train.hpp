#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ncgs/decoder.hpp"
#include "ncgs/grid.hpp"
#include "ncgs/nn.hpp"
#include "ncgs/quant.hpp"

namespace ncgs {

struct TrainConfig {
  double lambda1 = 5.0;
  double lambda2 = 10.0;
  /// Grid points with |V[..., 0]| < tau count as near-surface (2 cells).
  double tau = 2.0 / kTruncationCells;
  int epochs = 400;
  double lr = 1e-3;
  /// Cosine decay from lr to lr * lr_final_fraction over lr_horizon epochs
  /// (0 means `epochs`); the default fraction 1 keeps lr constant.
  double lr_final_fraction = 1.0;
  int lr_horizon = 0;
  QuantSpec feature_quant{};
  QuantSpec param_quant{};
  std::uint64_t seed = 0;

  void validate() const;
  DecoderQuant decoder_quant() const { return {feature_quant, param_quant}; }
  /// Learning rate of the given (1-based) epoch.
  double lr_at(int epoch) const;
};

template <typename T>
struct LossResult {
  double total = 0.0;
  double l1 = 0.0;         // mean |pred - target| over all entries
  double masked_l1 = 0.0;  // same, restricted to near-surface grid points
  double ssim = 1.0;
  nn::Tensor4<T> grad;     // d total / d pred; empty unless requested
};

/// L1 + lambda1 * masked L1 + lambda2 * (1 - SSIM). Both L1 terms are means.
template <typename T>
LossResult<T> regression_loss(const nn::Tensor4<T>& predicted, const nn::Tensor4<T>& target, const TrainConfig& cfg,
                              bool want_grad = true);

/// Mean absolute error over all channels of grid points with |target_0| < tau.
double masked_mae(const TsdfDefTensor& predicted, const TsdfDefTensor& target, double tau);

/// Everything needed to continue training or to compress: raw features and
/// parameters, optimizer moments, and the per-epoch loss history.
struct ModelState {
  DecoderArch arch;
  QuantSpec feature_quant{};
  QuantSpec param_quant{};
  std::vector<std::vector<float>> features;
  std::vector<float> params;
  nn::AdamState<float> param_adam;
  std::vector<nn::AdamState<float>> feature_adam;
  int epoch = 0;
  std::vector<double> history;
  std::vector<std::string> names;
  std::vector<std::uint64_t> source_bytes;

  std::size_t size() const { return features.size(); }
  DecoderQuant decoder_quant() const { return {feature_quant, param_quant}; }
};

/// Features from N(0, 0.01^2), weights and biases uniform in +-1/sqrt(fan_in).
ModelState init_model(const DecoderArch& arch, std::size_t shapes, const TrainConfig& cfg);
std::vector<float> init_feature(const DecoderArch& arch, std::uint64_t seed);

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

/// Runs `epochs` more epochs. Each shape is one ADAM step on its feature and
/// on the shared parameters; the visiting order is reshuffled per epoch from
/// (seed, epoch), so split runs reproduce a single long run exactly.
void train_epochs(ModelState& state, std::span<const TsdfDefTensor> targets, const TrainConfig& cfg, int epochs,
                  const EpochCallback& on_epoch = {});

ModelState train_set(std::span<const TsdfDefTensor> targets, const DecoderArch& arch, const TrainConfig& cfg,
                     const EpochCallback& on_epoch = {});

/// Optimizes one new feature against frozen decoder parameters.
std::vector<float> fit_new_feature(const TsdfDefTensor& target, std::span<const float> frozen_params,
                                   const DecoderArch& arch, const TrainConfig& cfg,
                                   std::vector<double>* history = nullptr);

/// Decoder output through both quantizers, as a TSDF-Def tensor.
TsdfDefTensor decode_feature(std::span<const float> feature, std::span<const float> params, const DecoderArch& arch,
                             const DecoderQuant& quant);

}  // namespace ncgs
