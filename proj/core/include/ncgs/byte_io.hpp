#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ncgs/error.hpp"

namespace ncgs {

static_assert(std::endian::native == std::endian::little, "serialization assumes a little-endian host");

/// Appends little-endian scalars to a growing byte buffer.
class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_bytes(std::span<const std::uint8_t> data) { bytes_.insert(bytes_.end(), data.begin(), data.end()); }
  void put_string16(const std::string& s) {
    if (s.size() > 0xFFFF) fail(ErrorCode::kInvalidArgument, "string too long for u16 length prefix");
    put<std::uint16_t>(static_cast<std::uint16_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  template <typename T>
  void put_array(std::span<const T> values) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(values.data());
    bytes_.insert(bytes_.end(), p, p + values.size_bytes());
  }
  /// Overwrites a previously written scalar at byte offset `at`.
  template <typename T>
  void patch(std::size_t at, T value) {
    std::memcpy(bytes_.data() + at, &value, sizeof(T));
  }

  std::size_t size() const { return bytes_.size(); }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

/// Bounds-checked little-endian reader; running past the end raises
/// `underflow_code`.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data, ErrorCode underflow_code = ErrorCode::kTruncation)
      : data_(data), code_(underflow_code) {}

  template <typename T>
  T get() {
    require(sizeof(T));
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::span<const std::uint8_t> get_bytes(std::size_t n) {
    require(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::string get_string16() {
    const auto n = get<std::uint16_t>();
    auto b = get_bytes(n);
    return std::string(b.begin(), b.end());
  }
  template <typename T>
  std::vector<T> get_array(std::size_t count) {
    if (count > data_.size() / sizeof(T) + 1) fail(code_, "array length exceeds remaining data");
    auto b = get_bytes(count * sizeof(T));
    std::vector<T> out(count);
    std::memcpy(out.data(), b.data(), b.size());
    return out;
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  void seek(std::size_t pos) {
    if (pos > data_.size()) fail(code_, "seek past end of data");
    pos_ = pos;
  }

 private:
  void require(std::size_t n) const {
    if (n > data_.size() - pos_) fail(code_, "unexpected end of data");
  }

  std::span<const std::uint8_t> data_;
  ErrorCode code_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace ncgs
