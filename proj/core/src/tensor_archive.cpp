#include "ncgs/tensor_archive.hpp"

#include <fstream>
#include <iterator>

#include "ncgs/byte_io.hpp"
#include "ncgs/error.hpp"

namespace ncgs {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

std::vector<std::uint8_t> serialize_archive(const TensorArchive& archive) {
  if (archive.names.size() != archive.tensors.size() || archive.source_bytes.size() != archive.tensors.size()) {
    fail(ErrorCode::kInvalidArgument, "archive names/sizes must match tensor count");
  }
  ByteWriter w;
  w.put_bytes(std::span(reinterpret_cast<const std::uint8_t*>(TensorArchive::kMagic), 4));
  w.put<std::uint8_t>(TensorArchive::kVersion);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(archive.grid.resolution));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(archive.tensors.size()));
  for (const TsdfDefTensor& t : archive.tensors) {
    if (!(t.grid == archive.grid)) fail(ErrorCode::kShape, "all archived tensors must share one resolution");
    w.put_array(std::span<const float>(t.data));
  }
  for (std::size_t i = 0; i < archive.tensors.size(); ++i) {
    w.put_string16(archive.names[i]);
    w.put<std::uint64_t>(archive.source_bytes[i]);
  }
  return w.take();
}

TensorArchive deserialize_archive(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto magic = r.get_bytes(4);
  if (!std::equal(magic.begin(), magic.end(), TensorArchive::kMagic)) {
    fail(ErrorCode::kBadMagic, "not a tensor archive");
  }
  if (r.get<std::uint8_t>() != TensorArchive::kVersion) fail(ErrorCode::kBadVersion, "unsupported archive version");
  TensorArchive archive;
  archive.grid = GridSpec(r.get<std::uint16_t>());
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    TsdfDefTensor t(archive.grid);
    t.data = r.get_array<float>(t.data.size());
    archive.tensors.push_back(std::move(t));
  }
  if (r.remaining() == 0) {
    for (std::uint32_t i = 0; i < count; ++i) {
      archive.names.push_back("shape_" + std::to_string(i));
      archive.source_bytes.push_back(0);
    }
    return archive;
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    archive.names.push_back(r.get_string16());
    archive.source_bytes.push_back(r.get<std::uint64_t>());
  }
  return archive;
}

void write_archive(const TensorArchive& archive, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_archive(archive));
}

TensorArchive read_archive(const std::filesystem::path& path) { return deserialize_archive(read_file_bytes(path)); }

}  // namespace ncgs
