#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ncgs/grid.hpp"

namespace ncgs {

/// Fitted tensors for a set of shapes plus the provenance needed downstream
/// (shape names and the byte size of each source OBJ).
struct TensorArchive {
  static constexpr char kMagic[4] = {'N', 'C', 'G', 'T'};
  static constexpr std::uint8_t kVersion = 1;

  GridSpec grid;
  std::vector<TsdfDefTensor> tensors;
  std::vector<std::string> names;
  std::vector<std::uint64_t> source_bytes;

  std::size_t size() const { return tensors.size(); }
};

/// Header {magic, version u8, K u16, count u32}, then K^3 x 4 f32 blocks per
/// shape, then a trailer with per-shape name (u16 length + bytes) and source
/// byte count (u64).
std::vector<std::uint8_t> serialize_archive(const TensorArchive& archive);
TensorArchive deserialize_archive(std::span<const std::uint8_t> bytes);

void write_archive(const TensorArchive& archive, const std::filesystem::path& path);
TensorArchive read_archive(const std::filesystem::path& path);

}  // namespace ncgs
