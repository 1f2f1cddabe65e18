#include "ncgs/bitstream.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>

#include "ncgs/byte_io.hpp"
#include "ncgs/error.hpp"
#include "ncgs/huffman.hpp"

namespace ncgs {

namespace {

void put_quant(ByteWriter& w, const QuantSpec& q) {
  if (static_cast<double>(static_cast<float>(q.a)) != q.a || static_cast<double>(static_cast<float>(q.b)) != q.b) {
    fail(ErrorCode::kInvalidArgument, "quantizer bounds must be exactly representable as f32");
  }
  w.put<float>(static_cast<float>(q.a));
  w.put<float>(static_cast<float>(q.b));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(q.bits));
}

QuantSpec get_quant(ByteReader& r) {
  QuantSpec q;
  q.a = r.get<float>();
  q.b = r.get<float>();
  q.bits = r.get<std::uint8_t>();
  if (!(q.a < q.b) || q.bits < 1 || q.bits > 24) fail(ErrorCode::kIntegrity, "invalid quantizer in header");
  return q;
}

template <typename T>
T narrow(int value, const char* what) {
  if (value < 0 || value > static_cast<int>(std::numeric_limits<T>::max())) {
    fail(ErrorCode::kInvalidArgument, std::string(what) + " does not fit the container field");
  }
  return static_cast<T>(value);
}

void put_arch(ByteWriter& w, const DecoderArch& a) {
  w.put(narrow<std::uint16_t>(a.feature_resolution, "feature resolution"));
  w.put(narrow<std::uint16_t>(a.channels, "channel count"));
  w.put(narrow<std::uint16_t>(a.head_width, "head width"));
  w.put(narrow<std::uint8_t>(a.kernel, "kernel size"));
  w.put(narrow<std::uint8_t>(static_cast<int>(a.modules.size()), "module count"));
  for (const UpsampleModule& m : a.modules) {
    w.put(narrow<std::uint8_t>(m.scale, "upsampling scale"));
    w.put(narrow<std::uint16_t>(m.width, "module width"));
  }
  w.put(narrow<std::uint16_t>(a.output_resolution(), "resolution"));
}

DecoderArch get_arch(ByteReader& r) {
  DecoderArch a;
  a.feature_resolution = r.get<std::uint16_t>();
  a.channels = r.get<std::uint16_t>();
  a.head_width = r.get<std::uint16_t>();
  a.kernel = r.get<std::uint8_t>();
  const int modules = r.get<std::uint8_t>();
  for (int i = 0; i < modules; ++i) {
    UpsampleModule m;
    m.scale = r.get<std::uint8_t>();
    m.width = r.get<std::uint16_t>();
    a.modules.push_back(m);
  }
  const int k = r.get<std::uint16_t>();
  try {
    a.validate_for(k);
  } catch (const Error& e) {
    fail(ErrorCode::kIntegrity, std::string("invalid architecture in header: ") + e.what());
  }
  return a;
}

struct Header {
  QuantSpec feature_quant;
  QuantSpec param_quant;
  DecoderArch arch;
  std::uint32_t shapes = 0;
  HuffmanTable feature_table;
  HuffmanTable param_table;
  BitstreamLayout layout;
};

Header read_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(Bitstream::kMagic) ||
      std::memcmp(bytes.data(), Bitstream::kMagic, sizeof(Bitstream::kMagic)) != 0) {
    fail(ErrorCode::kBadMagic, "not an NCGS bitstream");
  }
  ByteReader r(bytes);
  r.get_bytes(sizeof(Bitstream::kMagic));
  const auto version = r.get<std::uint8_t>();
  if (version != Bitstream::kVersion) fail(ErrorCode::kBadVersion, "unsupported bitstream version " + std::to_string(version));

  Header h;
  h.feature_quant = get_quant(r);
  h.param_quant = get_quant(r);
  h.arch = get_arch(r);
  h.shapes = r.get<std::uint32_t>();
  if (h.shapes == 0) fail(ErrorCode::kIntegrity, "bitstream holds no shapes");
  h.layout.feature_table = r.position();
  auto table = [&](const QuantSpec& q) {
    const auto raw = r.get_bytes(q.num_levels());
    return HuffmanTable(std::vector<std::uint8_t>(raw.begin(), raw.end()));
  };
  h.feature_table = table(h.feature_quant);
  h.layout.param_table = r.position();
  h.param_table = table(h.param_quant);
  for (auto& o : h.layout.offsets) o = r.get<std::uint64_t>();
  h.layout.header_bytes = r.position();

  const auto& o = h.layout.offsets;
  if (o[BitstreamLayout::kEnd] > bytes.size()) {
    fail(ErrorCode::kTruncation, "bitstream is shorter than its declared length");
  }
  if (o[0] != h.layout.header_bytes || !(o[0] < o[1] && o[1] < o[2] && o[2] < o[3]) || o[3] != bytes.size()) {
    fail(ErrorCode::kCorruptOffsets, "section offsets are inconsistent");
  }
  return h;
}

std::span<const std::uint8_t> section(std::span<const std::uint8_t> bytes, const BitstreamLayout& l, int which) {
  return bytes.subspan(l.offsets[which], l.offsets[which + 1] - l.offsets[which]);
}

}  // namespace

std::uint64_t CompressedSet::original_bytes() const {
  return std::accumulate(source_bytes.begin(), source_bytes.end(), std::uint64_t{0});
}

CompressedSet Bitstream::quantize(const DecoderArch& arch, const QuantSpec& feature_quant,
                                  const QuantSpec& param_quant, std::span<const std::vector<float>> features,
                                  std::span<const float> params, std::vector<std::string> names,
                                  std::vector<std::uint64_t> source_bytes) {
  CompressedSet set;
  set.arch = arch;
  set.feature_quant = feature_quant;
  set.param_quant = param_quant;
  for (const auto& f : features) set.features.push_back(ncgs::quantize(std::span<const float>(f), feature_quant));
  set.params = ncgs::quantize(params, param_quant);
  set.names = std::move(names);
  set.source_bytes = std::move(source_bytes);
  return set;
}

std::vector<std::uint8_t> Bitstream::encode(const CompressedSet& set, CompressionReport* report) {
  set.arch.validate();
  set.feature_quant.validate();
  set.param_quant.validate();
  if (set.features.empty()) fail(ErrorCode::kInvalidArgument, "cannot compress an empty shape set");
  if (set.names.size() != set.size() || set.source_bytes.size() != set.size()) {
    fail(ErrorCode::kInvalidArgument, "names and source sizes must match the shape count");
  }
  if (set.params.size() != set.arch.param_count()) fail(ErrorCode::kShape, "parameter count does not match architecture");

  std::vector<float> all_features;
  all_features.reserve(set.size() * set.arch.feature_size());
  for (const auto& f : set.features) {
    if (f.size() != set.arch.feature_size()) fail(ErrorCode::kShape, "feature size does not match architecture");
    all_features.insert(all_features.end(), f.begin(), f.end());
  }
  const std::vector<std::uint32_t> f_levels = to_levels(all_features, set.feature_quant);
  const std::vector<std::uint32_t> p_levels = to_levels(set.params, set.param_quant);
  const HuffmanTable f_table = huffman_build(histogram(f_levels, set.feature_quant.num_levels()));
  const HuffmanTable p_table = huffman_build(histogram(p_levels, set.param_quant.num_levels()));
  const std::vector<std::uint8_t> f_payload = huffman_encode(f_levels, f_table);
  const std::vector<std::uint8_t> p_payload = huffman_encode(p_levels, p_table);

  ByteWriter w;
  w.put_bytes(std::span(reinterpret_cast<const std::uint8_t*>(kMagic), sizeof(kMagic)));
  w.put<std::uint8_t>(kVersion);
  put_quant(w, set.feature_quant);
  put_quant(w, set.param_quant);
  put_arch(w, set.arch);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(set.size()));
  w.put_bytes(f_table.lengths());
  w.put_bytes(p_table.lengths());
  const std::size_t offsets_at = w.size();
  for (int i = 0; i < 4; ++i) w.put<std::uint64_t>(0);

  std::array<std::uint64_t, 4> offsets{};
  offsets[0] = w.size();
  w.put_bytes(f_payload);
  offsets[1] = w.size();
  w.put_bytes(p_payload);
  offsets[2] = w.size();
  for (std::size_t i = 0; i < set.size(); ++i) {
    w.put_string16(set.names[i]);
    w.put<std::uint64_t>(set.source_bytes[i]);
  }
  offsets[3] = w.size();
  for (int i = 0; i < 4; ++i) w.patch<std::uint64_t>(offsets_at + 8 * i, offsets[i]);

  if (report) {
    report->original_bytes = set.original_bytes();
    report->compressed_bytes = w.size();
    report->feature_payload_bytes = f_payload.size();
    report->param_payload_bytes = p_payload.size();
  }
  return w.take();
}

BitstreamLayout Bitstream::layout(std::span<const std::uint8_t> bytes) { return read_header(bytes).layout; }

CompressedSet Bitstream::decode(std::span<const std::uint8_t> bytes) {
  const Header h = read_header(bytes);
  CompressedSet set;
  set.arch = h.arch;
  set.feature_quant = h.feature_quant;
  set.param_quant = h.param_quant;

  const std::size_t fsize = h.arch.feature_size();
  const std::vector<std::uint32_t> f_levels =
      huffman_decode(section(bytes, h.layout, BitstreamLayout::kFeatures), h.feature_table, h.shapes * fsize);
  const std::vector<std::uint32_t> p_levels =
      huffman_decode(section(bytes, h.layout, BitstreamLayout::kParams), h.param_table, h.arch.param_count());
  const std::vector<float> features = from_levels(f_levels, h.feature_quant);
  for (std::size_t i = 0; i < h.shapes; ++i) {
    set.features.emplace_back(features.begin() + static_cast<std::ptrdiff_t>(i * fsize),
                              features.begin() + static_cast<std::ptrdiff_t>((i + 1) * fsize));
  }
  set.params = from_levels(p_levels, h.param_quant);

  ByteReader names(section(bytes, h.layout, BitstreamLayout::kNames), ErrorCode::kIntegrity);
  for (std::size_t i = 0; i < h.shapes; ++i) {
    set.names.push_back(names.get_string16());
    set.source_bytes.push_back(names.get<std::uint64_t>());
  }
  if (names.remaining() != 0) fail(ErrorCode::kIntegrity, "trailing bytes in the names section");
  return set;
}

CompressionReport write_bitstream(const CompressedSet& set, const std::filesystem::path& path) {
  CompressionReport report;
  const std::vector<std::uint8_t> bytes = Bitstream::encode(set, &report);
  write_file_bytes(path, bytes);
  return report;
}

CompressedSet read_bitstream(const std::filesystem::path& path) { return Bitstream::decode(read_file_bytes(path)); }

}  // namespace ncgs
