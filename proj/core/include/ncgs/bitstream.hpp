#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ncgs/decoder.hpp"
#include "ncgs/quant.hpp"

namespace ncgs {

/// Quantized features and decoder parameters of a compressed shape set.
struct CompressedSet {
  DecoderArch arch;
  QuantSpec feature_quant{};
  QuantSpec param_quant{};
  std::vector<std::vector<float>> features;  // on the feature lattice
  std::vector<float> params;                 // on the parameter lattice
  std::vector<std::string> names;
  std::vector<std::uint64_t> source_bytes;   // input OBJ size per shape

  std::size_t size() const { return features.size(); }
  std::uint64_t original_bytes() const;
};

struct CompressionReport {
  std::uint64_t original_bytes = 0;
  std::uint64_t compressed_bytes = 0;
  std::uint64_t feature_payload_bytes = 0;
  std::uint64_t param_payload_bytes = 0;

  double ratio() const {
    return compressed_bytes ? static_cast<double>(original_bytes) / static_cast<double>(compressed_bytes) : 0.0;
  }
};

/// Byte ranges of a serialized container.
struct BitstreamLayout {
  enum Section { kFeatures = 0, kParams = 1, kNames = 2, kEnd = 3 };
  std::size_t header_bytes = 0;
  std::array<std::uint64_t, 4> offsets{};  // feature, param, names, end
  std::size_t feature_table = 0;           // offset of the feature length table
  std::size_t param_table = 0;
};

/// Layout: "NCGS", version, feature and parameter QuantSpec (f32 a, f32 b,
/// u8 N), architecture, shape count u32, one u8 code length per level for
/// the feature then the parameter table, four u64 offsets, the feature
/// payload, the parameter payload, and the names section (u16 length, name
/// bytes, u64 source size per shape). Little-endian throughout.
class Bitstream {
 public:
  static constexpr char kMagic[4] = {'N', 'C', 'G', 'S'};
  static constexpr std::uint8_t kVersion = 1;

  /// Quantizes raw features/parameters onto their lattices first.
  static CompressedSet quantize(const DecoderArch& arch, const QuantSpec& feature_quant, const QuantSpec& param_quant,
                                std::span<const std::vector<float>> features, std::span<const float> params,
                                std::vector<std::string> names, std::vector<std::uint64_t> source_bytes);

  static std::vector<std::uint8_t> encode(const CompressedSet& set, CompressionReport* report = nullptr);
  static CompressedSet decode(std::span<const std::uint8_t> bytes);
  /// Parses and validates the header only.
  static BitstreamLayout layout(std::span<const std::uint8_t> bytes);
};

CompressionReport write_bitstream(const CompressedSet& set, const std::filesystem::path& path);
CompressedSet read_bitstream(const std::filesystem::path& path);

}  // namespace ncgs
