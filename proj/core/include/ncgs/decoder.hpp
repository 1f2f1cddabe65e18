#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ncgs/grid.hpp"
#include "ncgs/nn.hpp"
#include "ncgs/quant.hpp"

namespace ncgs {

struct UpsampleModule {
  int scale = 2;
  int width = 16;  // channels after the pixel shuffle
  bool operator==(const UpsampleModule&) const = default;
};

/// Head 1^3 conv (C -> head_width), L x (conv -> pixel shuffle -> GELU),
/// then a 1^3 projection to the 4 TSDF-Def channels.
struct DecoderArch {
  int feature_resolution = 4;  // K'
  int channels = 16;           // C
  int head_width = 64;
  int kernel = 3;
  std::vector<UpsampleModule> modules;

  /// K' * prod(scale).
  int output_resolution() const;
  std::size_t feature_size() const {
    const auto k = static_cast<std::size_t>(feature_resolution);
    return k * k * k * static_cast<std::size_t>(channels);
  }
  /// All convolutions in forward order: head, one per module, projection.
  std::vector<nn::Conv3Spec> conv_specs() const;
  std::size_t param_count() const;
  void validate() const;
  /// Throws kShape unless the decoder produces a K x K x K tensor.
  void validate_for(int k) const;

  /// Same topology with the head and module widths multiplied by `factor`
  /// (rounded, at least 1).
  DecoderArch scaled_widths(double factor) const;

  bool operator==(const DecoderArch&) const = default;
};

/// Offsets of each convolution's weights and bias in the flat parameter vector.
struct LayerSlice {
  nn::Conv3Spec spec;
  std::size_t weights = 0;
  std::size_t bias = 0;
};
std::vector<LayerSlice> layer_slices(const DecoderArch& arch);

/// Quantizers applied inside the forward pass; disengaged means pass-through.
struct DecoderQuant {
  std::optional<QuantSpec> feature;
  std::optional<QuantSpec> params;
};

/// Activations kept by decoder_forward for the backward pass.
template <typename T>
struct DecoderTape {
  std::vector<T> params;                  // quantized parameters
  std::vector<nn::Tensor4<T>> conv_inputs;  // input of each convolution
  std::vector<nn::Tensor4<T>> shuffled;     // pre-activation of each module
};

template <typename T>
struct DecoderGrads {
  std::vector<T> feature;
  std::vector<T> params;
};

/// Decodes one feature into a K x K x K x 4 tensor clamped to [-1, 1].
template <typename T>
nn::Tensor4<T> decoder_forward(std::span<const T> feature, std::span<const T> params, const DecoderArch& arch,
                               const DecoderQuant& quant, DecoderTape<T>* tape = nullptr);

/// Gradients w.r.t. the raw (pre-quantization) feature and parameters. The
/// output clamp and both quantizers use straight-through gradients.
template <typename T>
DecoderGrads<T> decoder_backward(const DecoderTape<T>& tape, std::span<const T> feature, std::span<const T> params,
                                 const nn::Tensor4<T>& grad_output, const DecoderArch& arch,
                                 const DecoderQuant& quant, bool need_param_grad = true);

nn::Tensor4<float> as_tensor4(const TsdfDefTensor& tensor);
TsdfDefTensor as_tsdf(const nn::Tensor4<float>& tensor);

}  // namespace ncgs
