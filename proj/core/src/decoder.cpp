#include "ncgs/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ncgs/error.hpp"

namespace ncgs {

int DecoderArch::output_resolution() const {
  int k = feature_resolution;
  for (const UpsampleModule& m : modules) k *= m.scale;
  return k;
}

std::vector<nn::Conv3Spec> DecoderArch::conv_specs() const {
  std::vector<nn::Conv3Spec> specs;
  specs.reserve(modules.size() + 2);
  specs.push_back({1, channels, head_width});
  int width = head_width;
  for (const UpsampleModule& m : modules) {
    specs.push_back({kernel, width, m.width * m.scale * m.scale * m.scale});
    width = m.width;
  }
  specs.push_back({1, width, TsdfDefTensor::kChannels});
  return specs;
}

std::size_t DecoderArch::param_count() const {
  std::size_t n = 0;
  for (const nn::Conv3Spec& s : conv_specs()) n += s.param_count();
  return n;
}

void DecoderArch::validate() const {
  if (feature_resolution < 1) fail(ErrorCode::kShape, "feature resolution must be positive");
  if (channels < 1) fail(ErrorCode::kShape, "feature channels must be positive");
  if (head_width < 1) fail(ErrorCode::kShape, "head width must be positive");
  if (kernel < 1 || kernel % 2 == 0) fail(ErrorCode::kShape, "decoder kernel must be odd");
  for (const UpsampleModule& m : modules) {
    if (m.scale < 1) fail(ErrorCode::kShape, "upsampling scale must be positive");
    if (m.width < 1) fail(ErrorCode::kShape, "upsampling width must be positive");
  }
}

void DecoderArch::validate_for(int k) const {
  validate();
  if (output_resolution() != k) {
    fail(ErrorCode::kShape, "decoder produces resolution " + std::to_string(output_resolution()) +
                                " but the tensors have K=" + std::to_string(k));
  }
}

DecoderArch DecoderArch::scaled_widths(double factor) const {
  if (!(factor > 0.0)) fail(ErrorCode::kInvalidArgument, "width factor must be positive");
  auto scale = [factor](int w) { return std::max(1, static_cast<int>(std::lround(w * factor))); };
  DecoderArch out = *this;
  out.head_width = scale(head_width);
  for (UpsampleModule& m : out.modules) m.width = scale(m.width);
  return out;
}

std::vector<LayerSlice> layer_slices(const DecoderArch& arch) {
  std::vector<LayerSlice> slices;
  std::size_t offset = 0;
  for (const nn::Conv3Spec& s : arch.conv_specs()) {
    LayerSlice slice{s, offset, offset + s.weight_count()};
    offset += s.param_count();
    slices.push_back(slice);
  }
  return slices;
}

namespace {

template <typename T>
std::span<const T> weights_of(std::span<const T> params, const LayerSlice& l) {
  return params.subspan(l.weights, l.spec.weight_count());
}

template <typename T>
std::span<const T> bias_of(std::span<const T> params, const LayerSlice& l) {
  return params.subspan(l.bias, static_cast<std::size_t>(l.spec.out_channels));
}

template <typename T>
void check_inputs(std::span<const T> feature, std::span<const T> params, const DecoderArch& arch) {
  arch.validate();
  if (feature.size() != arch.feature_size()) {
    fail(ErrorCode::kShape, "feature has " + std::to_string(feature.size()) + " values, architecture expects " +
                                std::to_string(arch.feature_size()));
  }
  if (params.size() != arch.param_count()) {
    fail(ErrorCode::kShape, "parameter vector has " + std::to_string(params.size()) +
                                " values, architecture expects " + std::to_string(arch.param_count()));
  }
}

}  // namespace

template <typename T>
nn::Tensor4<T> decoder_forward(std::span<const T> feature, std::span<const T> params, const DecoderArch& arch,
                               const DecoderQuant& quant, DecoderTape<T>* tape) {
  check_inputs(feature, params, arch);
  const int kf = arch.feature_resolution;
  nn::Tensor4<T> x(kf, kf, kf, arch.channels);
  std::copy(feature.begin(), feature.end(), x.values.begin());
  if (quant.feature) quantize_inplace(std::span<T>(x.values), *quant.feature);

  std::vector<T> qparams(params.begin(), params.end());
  if (quant.params) quantize_inplace(std::span<T>(qparams), *quant.params);
  const std::span<const T> p(qparams);
  const std::vector<LayerSlice> slices = layer_slices(arch);

  if (tape) {
    tape->conv_inputs.clear();
    tape->shuffled.clear();
    tape->conv_inputs.push_back(x);
  }
  nn::Tensor4<T> y = nn::conv3d(x, weights_of(p, slices[0]), bias_of(p, slices[0]), slices[0].spec);
  for (std::size_t l = 0; l < arch.modules.size(); ++l) {
    const LayerSlice& s = slices[l + 1];
    if (tape) tape->conv_inputs.push_back(y);
    nn::Tensor4<T> z = nn::pixel_shuffle3d(nn::conv3d(y, weights_of(p, s), bias_of(p, s), s.spec),
                                           arch.modules[l].scale);
    y = nn::gelu(z);
    if (tape) tape->shuffled.push_back(std::move(z));
  }
  if (tape) tape->conv_inputs.push_back(y);
  const LayerSlice& last = slices.back();
  nn::Tensor4<T> out = nn::conv3d(y, weights_of(p, last), bias_of(p, last), last.spec);
  for (T& v : out.values) v = std::clamp(v, T(-1), T(1));
  if (tape) tape->params = std::move(qparams);
  return out;
}

template <typename T>
DecoderGrads<T> decoder_backward(const DecoderTape<T>& tape, std::span<const T> feature, std::span<const T> params,
                                 const nn::Tensor4<T>& grad_output, const DecoderArch& arch,
                                 const DecoderQuant& quant, bool need_param_grad) {
  check_inputs(feature, params, arch);
  if (tape.conv_inputs.size() != arch.modules.size() + 2 || tape.shuffled.size() != arch.modules.size()) {
    fail(ErrorCode::kShape, "decoder tape does not match the architecture");
  }
  const std::vector<LayerSlice> slices = layer_slices(arch);
  const std::span<const T> p(tape.params);

  DecoderGrads<T> grads;
  if (need_param_grad) grads.params.assign(params.size(), T(0));
  auto store = [&](const LayerSlice& s, const nn::Conv3dGrads<T>& g) {
    if (!need_param_grad) return;
    std::copy(g.weights.begin(), g.weights.end(), grads.params.begin() + static_cast<std::ptrdiff_t>(s.weights));
    std::copy(g.bias.begin(), g.bias.end(), grads.params.begin() + static_cast<std::ptrdiff_t>(s.bias));
  };

  // The output clamp passes gradients straight through.
  nn::Tensor4<T> g = grad_output;
  std::size_t layer = slices.size() - 1;
  {
    const LayerSlice& s = slices[layer];
    nn::Conv3dGrads<T> cg = nn::conv3d_backward(tape.conv_inputs[layer], weights_of(p, s), g, s.spec, true);
    store(s, cg);
    g = std::move(cg.input);
  }
  for (std::size_t l = arch.modules.size(); l-- > 0;) {
    layer = l + 1;
    g = nn::pixel_unshuffle3d(nn::gelu_backward(tape.shuffled[l], g), arch.modules[l].scale);
    const LayerSlice& s = slices[layer];
    nn::Conv3dGrads<T> cg = nn::conv3d_backward(tape.conv_inputs[layer], weights_of(p, s), g, s.spec, true);
    store(s, cg);
    g = std::move(cg.input);
  }
  nn::Conv3dGrads<T> cg = nn::conv3d_backward(tape.conv_inputs[0], weights_of(p, slices[0]), g, slices[0].spec, true);
  store(slices[0], cg);
  grads.feature = std::move(cg.input.values);

  if (quant.feature) nn::ste_quantize_backward(feature, std::span<T>(grads.feature), *quant.feature);
  if (need_param_grad && quant.params) nn::ste_quantize_backward(params, std::span<T>(grads.params), *quant.params);
  return grads;
}

nn::Tensor4<float> as_tensor4(const TsdfDefTensor& tensor) {
  const int k = tensor.grid.resolution;
  nn::Tensor4<float> out(k, k, k, TsdfDefTensor::kChannels);
  out.values = tensor.data;
  return out;
}

TsdfDefTensor as_tsdf(const nn::Tensor4<float>& tensor) {
  if (tensor.d != tensor.h || tensor.d != tensor.w || tensor.c != TsdfDefTensor::kChannels) {
    fail(ErrorCode::kShape, "decoded tensor is not K x K x K x 4");
  }
  TsdfDefTensor out{GridSpec(tensor.d)};
  out.data = tensor.values;
  return out;
}

#define NCGS_DECODER_INSTANTIATE(T)                                                                          \
  template nn::Tensor4<T> decoder_forward<T>(std::span<const T>, std::span<const T>, const DecoderArch&,     \
                                             const DecoderQuant&, DecoderTape<T>*);                          \
  template DecoderGrads<T> decoder_backward<T>(const DecoderTape<T>&, std::span<const T>, std::span<const T>, \
                                               const nn::Tensor4<T>&, const DecoderArch&, const DecoderQuant&, \
                                               bool);

NCGS_DECODER_INSTANTIATE(float)
NCGS_DECODER_INSTANTIATE(double)

#undef NCGS_DECODER_INSTANTIATE

}  // namespace ncgs
