#include "ncgs/nn.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Core>

#include "ncgs/error.hpp"

namespace ncgs::nn {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Rows are output voxels, columns are (kd, kh, kw, cin).
template <typename T>
void im2col(const Tensor4<T>& in, int k, std::vector<T>& col) {
  const int p = (k - 1) / 2;
  const std::size_t cols = static_cast<std::size_t>(k) * k * k * in.c;
  col.assign(in.voxels() * cols, T(0));
  std::size_t row = 0;
  for (int z = 0; z < in.d; ++z) {
    for (int y = 0; y < in.h; ++y) {
      for (int x = 0; x < in.w; ++x, ++row) {
        T* dst = col.data() + row * cols;
        for (int kz = 0; kz < k; ++kz) {
          const int sz = z + kz - p;
          for (int ky = 0; ky < k; ++ky) {
            const int sy = y + ky - p;
            for (int kx = 0; kx < k; ++kx, dst += in.c) {
              const int sx = x + kx - p;
              if (sz < 0 || sz >= in.d || sy < 0 || sy >= in.h || sx < 0 || sx >= in.w) continue;
              const T* src = in.values.data() + in.index(sz, sy, sx, 0);
              std::copy(src, src + in.c, dst);
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const std::vector<T>& col, int k, Tensor4<T>& out) {
  const int p = (k - 1) / 2;
  const std::size_t cols = static_cast<std::size_t>(k) * k * k * out.c;
  std::size_t row = 0;
  for (int z = 0; z < out.d; ++z) {
    for (int y = 0; y < out.h; ++y) {
      for (int x = 0; x < out.w; ++x, ++row) {
        const T* src = col.data() + row * cols;
        for (int kz = 0; kz < k; ++kz) {
          const int sz = z + kz - p;
          for (int ky = 0; ky < k; ++ky) {
            const int sy = y + ky - p;
            for (int kx = 0; kx < k; ++kx, src += out.c) {
              const int sx = x + kx - p;
              if (sz < 0 || sz >= out.d || sy < 0 || sy >= out.h || sx < 0 || sx >= out.w) continue;
              T* dst = out.values.data() + out.index(sz, sy, sx, 0);
              for (int ch = 0; ch < out.c; ++ch) dst[ch] += src[ch];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void check_conv(const Tensor4<T>& input, std::size_t weight_count, const Conv3Spec& spec) {
  spec.validate();
  if (input.c != spec.in_channels) {
    fail(ErrorCode::kShape, "conv3d expects " + std::to_string(spec.in_channels) + " input channels, got " +
                                std::to_string(input.c));
  }
  if (weight_count != spec.weight_count()) fail(ErrorCode::kShape, "conv3d weight count mismatch");
}

}  // namespace

void Conv3Spec::validate() const {
  if (kernel < 1 || kernel % 2 == 0) fail(ErrorCode::kShape, "conv3d kernel size must be odd");
  if (in_channels < 1 || out_channels < 1) fail(ErrorCode::kShape, "conv3d channel counts must be positive");
}

template <typename T>
Tensor4<T> conv3d(const Tensor4<T>& input, std::span<const T> weights, std::span<const T> bias,
                  const Conv3Spec& spec) {
  check_conv(input, weights.size(), spec);
  if (bias.size() != static_cast<std::size_t>(spec.out_channels)) fail(ErrorCode::kShape, "conv3d bias size mismatch");

  Tensor4<T> out(input.d, input.h, input.w, spec.out_channels);
  const auto rows = static_cast<Eigen::Index>(input.voxels());
  const auto inner = static_cast<Eigen::Index>(spec.weight_count() / spec.out_channels);
  Eigen::Map<const RowMatrix<T>> w(weights.data(), inner, spec.out_channels);
  Eigen::Map<RowMatrix<T>> o(out.values.data(), rows, spec.out_channels);
  if (spec.kernel == 1) {
    Eigen::Map<const RowMatrix<T>> x(input.values.data(), rows, inner);
    o.noalias() = x * w;
  } else {
    std::vector<T> col;
    im2col(input, spec.kernel, col);
    Eigen::Map<const RowMatrix<T>> x(col.data(), rows, inner);
    o.noalias() = x * w;
  }
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.data(), spec.out_channels);
  o.rowwise() += b;
  return out;
}

template <typename T>
Conv3dGrads<T> conv3d_backward(const Tensor4<T>& input, std::span<const T> weights, const Tensor4<T>& grad_output,
                               const Conv3Spec& spec, bool need_input_grad) {
  check_conv(input, weights.size(), spec);
  if (grad_output.d != input.d || grad_output.h != input.h || grad_output.w != input.w ||
      grad_output.c != spec.out_channels) {
    fail(ErrorCode::kShape, "conv3d gradient shape mismatch");
  }
  const auto rows = static_cast<Eigen::Index>(input.voxels());
  const auto inner = static_cast<Eigen::Index>(spec.weight_count() / spec.out_channels);
  Eigen::Map<const RowMatrix<T>> w(weights.data(), inner, spec.out_channels);
  Eigen::Map<const RowMatrix<T>> g(grad_output.values.data(), rows, spec.out_channels);

  Conv3dGrads<T> grads;
  grads.weights.assign(spec.weight_count(), T(0));
  grads.bias.assign(spec.out_channels, T(0));
  Eigen::Map<RowMatrix<T>> gw(grads.weights.data(), inner, spec.out_channels);
  const std::size_t oc = static_cast<std::size_t>(spec.out_channels);
  for (std::size_t r = 0; r < static_cast<std::size_t>(rows); ++r) {
    const T* row = grad_output.values.data() + r * oc;
    for (std::size_t c = 0; c < oc; ++c) grads.bias[c] += row[c];
  }

  if (spec.kernel == 1) {
    Eigen::Map<const RowMatrix<T>> x(input.values.data(), rows, inner);
    gw.noalias() = x.transpose() * g;
    if (need_input_grad) {
      grads.input = Tensor4<T>(input.d, input.h, input.w, input.c);
      Eigen::Map<RowMatrix<T>> gi(grads.input.values.data(), rows, inner);
      gi.noalias() = g * w.transpose();
    }
    return grads;
  }

  std::vector<T> col;
  im2col(input, spec.kernel, col);
  {
    Eigen::Map<const RowMatrix<T>> x(col.data(), rows, inner);
    gw.noalias() = x.transpose() * g;
  }
  if (need_input_grad) {
    Eigen::Map<RowMatrix<T>> gcol(col.data(), rows, inner);
    gcol.noalias() = g * w.transpose();
    grads.input = Tensor4<T>(input.d, input.h, input.w, input.c);
    col2im(col, spec.kernel, grads.input);
  }
  return grads;
}

template <typename T>
Tensor4<T> pixel_shuffle3d(const Tensor4<T>& input, int scale) {
  if (scale < 1) fail(ErrorCode::kShape, "pixel shuffle scale must be positive");
  const int s3 = scale * scale * scale;
  if (input.c % s3 != 0) fail(ErrorCode::kShape, "pixel shuffle channels not divisible by scale^3");
  const int cout = input.c / s3;
  Tensor4<T> out(input.d * scale, input.h * scale, input.w * scale, cout);
  for (int z = 0; z < input.d; ++z)
    for (int y = 0; y < input.h; ++y)
      for (int x = 0; x < input.w; ++x) {
        const T* src = input.values.data() + input.index(z, y, x, 0);
        for (int i = 0; i < scale; ++i)
          for (int j = 0; j < scale; ++j)
            for (int l = 0; l < scale; ++l) {
              T* dst = out.values.data() + out.index(scale * z + i, scale * y + j, scale * x + l, 0);
              const int sub = (i * scale + j) * scale + l;
              for (int ch = 0; ch < cout; ++ch) dst[ch] = src[ch * s3 + sub];
            }
      }
  return out;
}

template <typename T>
Tensor4<T> pixel_unshuffle3d(const Tensor4<T>& input, int scale) {
  if (scale < 1) fail(ErrorCode::kShape, "pixel shuffle scale must be positive");
  if (input.d % scale || input.h % scale || input.w % scale) {
    fail(ErrorCode::kShape, "pixel unshuffle dims not divisible by scale");
  }
  const int s3 = scale * scale * scale;
  Tensor4<T> out(input.d / scale, input.h / scale, input.w / scale, input.c * s3);
  for (int z = 0; z < out.d; ++z)
    for (int y = 0; y < out.h; ++y)
      for (int x = 0; x < out.w; ++x) {
        T* dst = out.values.data() + out.index(z, y, x, 0);
        for (int i = 0; i < scale; ++i)
          for (int j = 0; j < scale; ++j)
            for (int l = 0; l < scale; ++l) {
              const T* src = input.values.data() + input.index(scale * z + i, scale * y + j, scale * x + l, 0);
              const int sub = (i * scale + j) * scale + l;
              for (int ch = 0; ch < input.c; ++ch) dst[ch * s3 + sub] = src[ch];
            }
      }
  return out;
}

template <typename T>
T gelu_value(T x) {
  const T k = static_cast<T>(std::sqrt(2.0 / std::numbers::pi));
  const T u = k * (x + T(0.044715) * x * x * x);
  return T(0.5) * x * (T(1) + std::tanh(u));
}

template <typename T>
T gelu_derivative(T x) {
  const T k = static_cast<T>(std::sqrt(2.0 / std::numbers::pi));
  const T u = k * (x + T(0.044715) * x * x * x);
  const T th = std::tanh(u);
  const T du = k * (T(1) + T(3 * 0.044715) * x * x);
  return T(0.5) * (T(1) + th) + T(0.5) * x * (T(1) - th * th) * du;
}

template <typename T>
Tensor4<T> gelu(const Tensor4<T>& input) {
  Tensor4<T> out = input;
  for (T& v : out.values) v = gelu_value(v);
  return out;
}

template <typename T>
Tensor4<T> gelu_backward(const Tensor4<T>& input, const Tensor4<T>& grad_output) {
  if (!input.same_dims(grad_output)) fail(ErrorCode::kShape, "gelu gradient shape mismatch");
  Tensor4<T> out = grad_output;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] *= gelu_derivative(input.values[i]);
  return out;
}

namespace {

std::vector<double> gaussian_window(const SsimOptions& o) {
  if (o.window < 1 || o.window > 63 || o.window % 2 == 0 || !(o.sigma > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "ssim window must be odd and at most 63");
  }
  std::vector<double> g(o.window);
  const int r = o.window / 2;
  double sum = 0.0;
  for (int i = 0; i < o.window; ++i) {
    g[i] = std::exp(-0.5 * (i - r) * (i - r) / (o.sigma * o.sigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Zero-padded 1D correlation with a symmetric window along `axis`. The data
// is viewed as [outer][len][inner] so the innermost loop is contiguous.
template <typename T>
void filter_axis(const std::vector<T>& in, std::vector<T>& out, const Tensor4<T>& dims, int axis,
                 const std::vector<double>& g) {
  const int r = static_cast<int>(g.size()) / 2;
  const int len = axis == 0 ? dims.d : (axis == 1 ? dims.h : dims.w);
  const std::size_t inner = axis == 0   ? static_cast<std::size_t>(dims.h) * dims.w * dims.c
                            : axis == 1 ? static_cast<std::size_t>(dims.w) * dims.c
                                        : static_cast<std::size_t>(dims.c);
  const std::size_t outer = in.size() / (inner * static_cast<std::size_t>(len));
  T wgt[64];
  for (std::size_t t = 0; t < g.size() && t < 64; ++t) wgt[t] = static_cast<T>(g[t]);
  out.assign(in.size(), T(0));
  for (std::size_t o = 0; o < outer; ++o) {
    const std::size_t line = o * len * inner;
    if (inner < 16) {
      for (int t = -r; t <= r; ++t) {
        const int lo = std::max(0, -t);
        const int hi = std::min(len, len - t);
        if (lo >= hi) continue;
        const T wt = wgt[t + r];
        T* dst = out.data() + line + lo * inner;
        const T* src = in.data() + line + (lo + t) * inner;
        const std::size_t count = static_cast<std::size_t>(hi - lo) * inner;
        for (std::size_t i = 0; i < count; ++i) dst[i] += wt * src[i];
      }
      continue;
    }
    for (int z = 0; z < len; ++z) {
      T* dst = out.data() + line + z * inner;
      for (int t = std::max(-r, -z); t <= std::min(r, len - 1 - z); ++t) {
        const T wt = wgt[t + r];
        const T* src = in.data() + line + (z + t) * inner;
        for (std::size_t i = 0; i < inner; ++i) dst[i] += wt * src[i];
      }
    }
  }
}

template <typename T>
std::vector<T> gaussian_blur(const std::vector<T>& in, const Tensor4<T>& dims, const std::vector<double>& g) {
  std::vector<T> a, b;
  filter_axis(in, a, dims, 0, g);
  filter_axis(a, b, dims, 1, g);
  filter_axis(b, a, dims, 2, g);
  return a;
}

}  // namespace

template <typename T>
SsimResult<T> ssim3d(const Tensor4<T>& x, const Tensor4<T>& y, bool want_grad, const SsimOptions& options) {
  if (!x.same_dims(y)) fail(ErrorCode::kShape, "ssim3d inputs differ in shape");
  const std::vector<double> g = gaussian_window(options);
  const std::size_t n = x.size();

  // Border renormalization: divide by the blurred all-ones volume.
  const std::vector<T> ones(n, T(1));
  std::vector<T> norm = gaussian_blur(ones, x, g);
  auto average = [&](const std::vector<T>& v) {
    std::vector<T> out = gaussian_blur(v, x, g);
    for (std::size_t i = 0; i < n; ++i) out[i] /= norm[i];
    return out;
  };

  std::vector<T> xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    xx[i] = x.values[i] * x.values[i];
    yy[i] = y.values[i] * y.values[i];
    xy[i] = x.values[i] * y.values[i];
  }
  const std::vector<T> mx = average(x.values);
  const std::vector<T> my = average(y.values);
  const std::vector<T> exx = average(xx);
  const std::vector<T> eyy = average(yy);
  const std::vector<T> exy = average(xy);

  const T c1 = static_cast<T>(options.c1());
  const T c2 = static_cast<T>(options.c2());
  const T inv_n = T(1) / static_cast<T>(n);

  SsimResult<T> result;
  std::vector<T> g_mu, g_xx, g_xy;
  if (want_grad) {
    g_mu.resize(n);
    g_xx.resize(n);
    g_xy.resize(n);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const T vx = exx[i] - mx[i] * mx[i];
    const T vy = eyy[i] - my[i] * my[i];
    const T cxy = exy[i] - mx[i] * my[i];
    const T l1 = T(2) * mx[i] * my[i] + c1;
    const T l2 = mx[i] * mx[i] + my[i] * my[i] + c1;
    const T s1 = T(2) * cxy + c2;
    const T s2 = vx + vy + c2;
    const T denom = l2 * s2;
    const T s = l1 * s1 / denom;
    total += static_cast<double>(s);
    if (want_grad) {
      const T ds_dl1 = s1 / denom;
      const T ds_ds1 = l1 / denom;
      const T ds_dl2 = -s / l2;
      const T ds_ds2 = -s / s2;
      g_mu[i] = inv_n * (ds_dl1 * T(2) * my[i] + ds_dl2 * T(2) * mx[i] - ds_ds1 * T(2) * my[i] -
                         ds_ds2 * T(2) * mx[i]);
      g_xx[i] = inv_n * ds_ds2;
      g_xy[i] = inv_n * T(2) * ds_ds1;
    }
  }
  result.value = static_cast<T>(total / static_cast<double>(n));

  if (want_grad) {
    // Adjoint of the renormalized average: blur(g / norm).
    auto adjoint = [&](std::vector<T>& v) {
      for (std::size_t i = 0; i < n; ++i) v[i] /= norm[i];
      return gaussian_blur(v, x, g);
    };
    const std::vector<T> a_mu = adjoint(g_mu);
    const std::vector<T> a_xx = adjoint(g_xx);
    const std::vector<T> a_xy = adjoint(g_xy);
    result.grad_x = Tensor4<T>(x.d, x.h, x.w, x.c);
    for (std::size_t i = 0; i < n; ++i) {
      result.grad_x.values[i] = a_mu[i] + T(2) * x.values[i] * a_xx[i] + y.values[i] * a_xy[i];
    }
  }
  return result;
}

template <typename T>
Tensor4<T> ste_quantize(const Tensor4<T>& input, const QuantSpec& spec) {
  Tensor4<T> out = input;
  quantize_inplace(std::span<T>(out.values), spec);
  return out;
}

template <typename T>
void ste_quantize_backward(std::span<const T> input, std::span<T> grad, const QuantSpec& spec) {
  if (input.size() != grad.size()) fail(ErrorCode::kShape, "ste gradient size mismatch");
  const T a = static_cast<T>(spec.a);
  const T b = static_cast<T>(spec.b);
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (input[i] < a || input[i] > b) grad[i] = T(0);
  }
}

template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state) {
  if (params.size() != grads.size() || params.size() != state.size()) {
    fail(ErrorCode::kShape, "adam parameter, gradient and state sizes differ");
  }
  state.t += 1;
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(state.beta1, static_cast<double>(state.t)));
  const T c2 = static_cast<T>(1.0 - std::pow(state.beta2, static_cast<double>(state.t)));
  const T lr = static_cast<T>(state.lr);
  const T eps = static_cast<T>(state.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    state.m[i] = b1 * state.m[i] + (T(1) - b1) * g;
    state.v[i] = b2 * state.v[i] + (T(1) - b2) * g * g;
    const T mhat = state.m[i] / c1;
    const T vhat = state.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

#define NCGS_NN_INSTANTIATE(T)                                                                                   \
  template Tensor4<T> conv3d<T>(const Tensor4<T>&, std::span<const T>, std::span<const T>, const Conv3Spec&);   \
  template Conv3dGrads<T> conv3d_backward<T>(const Tensor4<T>&, std::span<const T>, const Tensor4<T>&,          \
                                             const Conv3Spec&, bool);                                          \
  template Tensor4<T> pixel_shuffle3d<T>(const Tensor4<T>&, int);                                              \
  template Tensor4<T> pixel_unshuffle3d<T>(const Tensor4<T>&, int);                                            \
  template T gelu_value<T>(T);                                                                                 \
  template T gelu_derivative<T>(T);                                                                            \
  template Tensor4<T> gelu<T>(const Tensor4<T>&);                                                              \
  template Tensor4<T> gelu_backward<T>(const Tensor4<T>&, const Tensor4<T>&);                                  \
  template SsimResult<T> ssim3d<T>(const Tensor4<T>&, const Tensor4<T>&, bool, const SsimOptions&);            \
  template Tensor4<T> ste_quantize<T>(const Tensor4<T>&, const QuantSpec&);                                    \
  template void ste_quantize_backward<T>(std::span<const T>, std::span<T>, const QuantSpec&);                  \
  template void adam_step<T>(std::span<T>, std::span<const T>, AdamState<T>&);

NCGS_NN_INSTANTIATE(float)
NCGS_NN_INSTANTIATE(double)

#undef NCGS_NN_INSTANTIATE

}  // namespace ncgs::nn
