#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ncgs/quant.hpp"

// Minimal dense-tensor layers for the auto-decoder. There is no graph: each
// layer exposes a forward function and a matching backward function, and the
// decoder chains them by hand.

namespace ncgs::nn {

/// Dense (D, H, W, C) tensor in row-major order.
template <typename T>
struct Tensor4 {
  int d = 0;
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<T> values;

  Tensor4() = default;
  Tensor4(int d_, int h_, int w_, int c_, T fill = T(0))
      : d(d_), h(h_), w(w_), c(c_), values(static_cast<std::size_t>(d_) * h_ * w_ * c_, fill) {}

  std::size_t size() const { return values.size(); }
  std::size_t voxels() const { return static_cast<std::size_t>(d) * h * w; }
  std::size_t index(int z, int y, int x, int ch) const {
    return ((static_cast<std::size_t>(z) * h + y) * w + x) * c + ch;
  }
  T& at(int z, int y, int x, int ch) { return values[index(z, y, x, ch)]; }
  T at(int z, int y, int x, int ch) const { return values[index(z, y, x, ch)]; }
  bool same_dims(const Tensor4& o) const { return d == o.d && h == o.h && w == o.w && c == o.c; }
  bool operator==(const Tensor4&) const = default;
};

template <typename To, typename From>
Tensor4<To> tensor_cast(const Tensor4<From>& t) {
  Tensor4<To> out;
  out.d = t.d;
  out.h = t.h;
  out.w = t.w;
  out.c = t.c;
  out.values.assign(t.values.begin(), t.values.end());
  return out;
}

/// Stride-1 convolution with zero "same" padding. Weights are laid out
/// k x k x k x in_channels x out_channels.
struct Conv3Spec {
  int kernel = 3;
  int in_channels = 1;
  int out_channels = 1;

  int padding() const { return (kernel - 1) / 2; }
  std::size_t weight_count() const {
    return static_cast<std::size_t>(kernel) * kernel * kernel * in_channels * out_channels;
  }
  std::size_t param_count() const { return weight_count() + out_channels; }
  void validate() const;
};

template <typename T>
struct Conv3dGrads {
  Tensor4<T> input;
  std::vector<T> weights;
  std::vector<T> bias;
};

template <typename T>
Tensor4<T> conv3d(const Tensor4<T>& input, std::span<const T> weights, std::span<const T> bias,
                  const Conv3Spec& spec);

template <typename T>
Conv3dGrads<T> conv3d_backward(const Tensor4<T>& input, std::span<const T> weights, const Tensor4<T>& grad_output,
                               const Conv3Spec& spec, bool need_input_grad = true);

/// (D, H, W, s^3 C) -> (sD, sH, sW, C); output (s d + i, s h + j, s w + l, c)
/// reads input channel c s^3 + i s^2 + j s + l.
template <typename T>
Tensor4<T> pixel_shuffle3d(const Tensor4<T>& input, int scale);

/// Inverse rearrangement; also the backward pass of pixel_shuffle3d.
template <typename T>
Tensor4<T> pixel_unshuffle3d(const Tensor4<T>& input, int scale);

/// GELU, tanh approximation.
template <typename T>
T gelu_value(T x);
template <typename T>
T gelu_derivative(T x);
template <typename T>
Tensor4<T> gelu(const Tensor4<T>& input);
template <typename T>
Tensor4<T> gelu_backward(const Tensor4<T>& input, const Tensor4<T>& grad_output);

/// Volumetric SSIM: 7^3 Gaussian window (sigma 1.5) renormalized at the
/// borders, computed per channel and averaged over voxels and channels.
struct SsimOptions {
  int window = 7;
  double sigma = 1.5;
  double dynamic_range = 2.0;
  double c1() const { return (0.01 * dynamic_range) * (0.01 * dynamic_range); }
  double c2() const { return (0.03 * dynamic_range) * (0.03 * dynamic_range); }
};

template <typename T>
struct SsimResult {
  T value = T(0);
  Tensor4<T> grad_x;  // d value / d x; empty unless requested
};

template <typename T>
SsimResult<T> ssim3d(const Tensor4<T>& x, const Tensor4<T>& y, bool want_grad = false,
                     const SsimOptions& options = {});

/// Forward: element-wise uniform quantization. Backward: identity inside
/// [a, b], zero outside.
template <typename T>
Tensor4<T> ste_quantize(const Tensor4<T>& input, const QuantSpec& spec);
template <typename T>
void ste_quantize_backward(std::span<const T> input, std::span<T> grad, const QuantSpec& spec);

template <typename T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  std::int64_t t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n, double learning_rate) : m(n, T(0)), v(n, T(0)), lr(learning_rate) {}
  std::size_t size() const { return m.size(); }
};

/// One bias-corrected ADAM update in place.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state);

}  // namespace ncgs::nn
