#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ncgs/grid.hpp"
#include "ncgs/quant.hpp"

// Baseline: an 8-layer MLP queried per grid point with the concatenation of
// the point coordinate and a per-shape C-vector, quantized like the
// auto-decoder and coded with the same Huffman sections.

namespace ncgs {

struct QDeepSdfArch {
  static constexpr int kLayers = 8;
  int channels = 16;  // C
  int hidden = 128;

  /// (fan_in, fan_out) per layer: 3 + C -> hidden, six hidden -> hidden,
  /// hidden -> 4.
  std::vector<std::pair<int, int>> layer_dims() const;
  std::size_t param_count() const;
  void validate() const;
};

template <typename T>
struct QDeepSdfTape {
  std::vector<T> params;                 // quantized parameters
  std::vector<std::vector<T>> inputs;    // N x fan_in input of each layer
  std::vector<std::vector<T>> preacts;   // N x fan_out before GELU
  std::size_t rows = 0;
};

template <typename T>
struct QDeepSdfGrads {
  std::vector<T> feature;
  std::vector<T> params;
};

/// coords holds N x 3 values; returns N x 4 outputs. Weights are stored
/// fan_in x fan_out row-major followed by the bias, layer after layer.
template <typename T>
std::vector<T> qdeepsdf_forward(std::span<const T> coords, std::span<const T> feature, std::span<const T> params,
                                const QDeepSdfArch& arch, const std::optional<QuantSpec>& param_quant,
                                QDeepSdfTape<T>* tape = nullptr);

template <typename T>
QDeepSdfGrads<T> qdeepsdf_backward(const QDeepSdfTape<T>& tape, std::span<const T> params,
                                   std::span<const T> grad_output, const QDeepSdfArch& arch,
                                   const std::optional<QuantSpec>& param_quant);

struct QDeepSdfConfig {
  int epochs = 400;
  int batch = 4096;     // grid points per shape per step
  double lr = 1e-3;
  double tau = 2.0 / kTruncationCells;  // half of each batch comes from |V0| < tau
  QuantSpec feature_quant{};
  QuantSpec param_quant{};
  std::uint64_t seed = 0;
};

struct QDeepSdfModel {
  QDeepSdfArch arch;
  QuantSpec feature_quant{};
  QuantSpec param_quant{};
  std::vector<std::vector<float>> features;
  std::vector<float> params;
  std::vector<double> history;  // mean L1 per epoch
};

QDeepSdfModel train_qdeepsdf(std::span<const TsdfDefTensor> tensors, const QDeepSdfArch& arch,
                             const QDeepSdfConfig& cfg);

/// Evaluates the quantized model at every grid point; output clamped to [-1, 1].
TsdfDefTensor qdeepsdf_decode(const QDeepSdfModel& model, std::size_t shape, GridSpec grid);

/// Mean |V_hat - V| over all entries of the decoded tensor.
double qdeepsdf_mae(const QDeepSdfModel& model, std::size_t shape, const TsdfDefTensor& target);

/// Size of the Huffman-coded container for this model's quantized features
/// and parameters (same layout as the auto-decoder bitstream).
std::uint64_t qdeepsdf_compressed_bytes(const QDeepSdfModel& model);

}  // namespace ncgs
