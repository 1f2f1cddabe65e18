#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace ncgs {

/// Uniform quantizer over [a, b] with 2^bits + 1 levels (the extra level puts
/// 0 on the lattice when a = -b).
struct QuantSpec {
  double a = -1.0;
  double b = 1.0;
  int bits = 8;

  double step() const { return (b - a) / std::ldexp(1.0, bits); }
  std::uint32_t max_level() const { return std::uint32_t{1} << bits; }
  std::uint32_t num_levels() const { return max_level() + 1; }

  void validate() const;
  bool operator==(const QuantSpec&) const = default;
};

/// Q(x) = round((clamp(x, a, b) - a) / s) * s + a, rounding half away from zero.
template <typename T>
T quantize_value(T x, const QuantSpec& spec) {
  const T a = static_cast<T>(spec.a);
  const T b = static_cast<T>(spec.b);
  const T s = static_cast<T>(spec.step());
  const T c = x < a ? a : (x > b ? b : x);
  return std::round((c - a) / s) * s + a;
}

template <typename T>
std::vector<T> quantize(std::span<const T> x, const QuantSpec& spec) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = quantize_value(x[i], spec);
  return out;
}

template <typename T>
void quantize_inplace(std::span<T> x, const QuantSpec& spec) {
  for (T& v : x) v = quantize_value(v, spec);
}

}  // namespace ncgs
