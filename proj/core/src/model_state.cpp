#include "ncgs/model_state.hpp"

#include <algorithm>

#include "ncgs/byte_io.hpp"
#include "ncgs/error.hpp"

namespace ncgs {

namespace {

void put_quant(ByteWriter& w, const QuantSpec& q) {
  w.put<double>(q.a);
  w.put<double>(q.b);
  w.put<std::int32_t>(q.bits);
}

QuantSpec get_quant(ByteReader& r) {
  QuantSpec q;
  q.a = r.get<double>();
  q.b = r.get<double>();
  q.bits = r.get<std::int32_t>();
  q.validate();
  return q;
}

void put_adam(ByteWriter& w, const nn::AdamState<float>& a) {
  w.put<std::uint64_t>(a.m.size());
  w.put<std::int64_t>(a.t);
  w.put<double>(a.lr);
  w.put<double>(a.beta1);
  w.put<double>(a.beta2);
  w.put<double>(a.eps);
  w.put_array(std::span<const float>(a.m));
  w.put_array(std::span<const float>(a.v));
}

nn::AdamState<float> get_adam(ByteReader& r, std::size_t expected) {
  const auto n = r.get<std::uint64_t>();
  if (n != expected) fail(ErrorCode::kIntegrity, "optimizer state size does not match its parameters");
  nn::AdamState<float> a;
  a.t = r.get<std::int64_t>();
  a.lr = r.get<double>();
  a.beta1 = r.get<double>();
  a.beta2 = r.get<double>();
  a.eps = r.get<double>();
  a.m = r.get_array<float>(n);
  a.v = r.get_array<float>(n);
  return a;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const ModelState& s) {
  s.arch.validate();
  if (s.feature_adam.size() != s.size() || s.names.size() != s.size() || s.source_bytes.size() != s.size()) {
    fail(ErrorCode::kInvalidArgument, "model state lists disagree on the shape count");
  }
  ByteWriter w;
  w.put_bytes(std::span(reinterpret_cast<const std::uint8_t*>(kModelMagic), sizeof(kModelMagic)));
  w.put<std::uint8_t>(kModelVersion);

  w.put<std::int32_t>(s.arch.feature_resolution);
  w.put<std::int32_t>(s.arch.channels);
  w.put<std::int32_t>(s.arch.head_width);
  w.put<std::int32_t>(s.arch.kernel);
  w.put<std::int32_t>(static_cast<std::int32_t>(s.arch.modules.size()));
  for (const UpsampleModule& m : s.arch.modules) {
    w.put<std::int32_t>(m.scale);
    w.put<std::int32_t>(m.width);
  }
  put_quant(w, s.feature_quant);
  put_quant(w, s.param_quant);

  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
  for (const auto& f : s.features) w.put_array(std::span<const float>(f));
  w.put_array(std::span<const float>(s.params));
  put_adam(w, s.param_adam);
  for (const auto& a : s.feature_adam) put_adam(w, a);

  w.put<std::int32_t>(s.epoch);
  w.put<std::uint64_t>(s.history.size());
  w.put_array(std::span<const double>(s.history));
  for (std::size_t i = 0; i < s.size(); ++i) {
    w.put_string16(s.names[i]);
    w.put<std::uint64_t>(s.source_bytes[i]);
  }
  return w.take();
}

ModelState deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kModelMagic) || !std::equal(kModelMagic, kModelMagic + 4, bytes.begin())) {
    fail(ErrorCode::kBadMagic, "not a model state file");
  }
  ByteReader r(bytes);
  r.get_bytes(sizeof(kModelMagic));
  if (r.get<std::uint8_t>() != kModelVersion) fail(ErrorCode::kBadVersion, "unsupported model state version");

  ModelState s;
  s.arch.feature_resolution = r.get<std::int32_t>();
  s.arch.channels = r.get<std::int32_t>();
  s.arch.head_width = r.get<std::int32_t>();
  s.arch.kernel = r.get<std::int32_t>();
  const auto modules = r.get<std::int32_t>();
  if (modules < 0 || modules > 64) fail(ErrorCode::kIntegrity, "implausible module count");
  for (int i = 0; i < modules; ++i) {
    UpsampleModule m;
    m.scale = r.get<std::int32_t>();
    m.width = r.get<std::int32_t>();
    s.arch.modules.push_back(m);
  }
  try {
    s.arch.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kIntegrity, std::string("invalid architecture: ") + e.what());
  }
  s.feature_quant = get_quant(r);
  s.param_quant = get_quant(r);

  const auto count = r.get<std::uint32_t>();
  const std::size_t fsize = s.arch.feature_size();
  for (std::uint32_t i = 0; i < count; ++i) s.features.push_back(r.get_array<float>(fsize));
  s.params = r.get_array<float>(s.arch.param_count());
  s.param_adam = get_adam(r, s.params.size());
  for (std::uint32_t i = 0; i < count; ++i) s.feature_adam.push_back(get_adam(r, fsize));

  s.epoch = r.get<std::int32_t>();
  const auto history = r.get<std::uint64_t>();
  s.history = r.get_array<double>(history);
  for (std::uint32_t i = 0; i < count; ++i) {
    s.names.push_back(r.get_string16());
    s.source_bytes.push_back(r.get<std::uint64_t>());
  }
  if (r.remaining() != 0) fail(ErrorCode::kIntegrity, "trailing bytes after model state");
  return s;
}

void write_model(const ModelState& state, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_model(state));
}

ModelState read_model(const std::filesystem::path& path) { return deserialize_model(read_file_bytes(path)); }

}  // namespace ncgs
