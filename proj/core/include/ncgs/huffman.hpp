#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ncgs/quant.hpp"

namespace ncgs {

/// Lattice values to level indices in [0, 2^N]; off-lattice input is an
/// integrity error.
std::vector<std::uint32_t> to_levels(std::span<const float> values, const QuantSpec& spec);
std::vector<float> from_levels(std::span<const std::uint32_t> levels, const QuantSpec& spec);

/// Canonical prefix code described by one length per symbol (0 = unused).
class HuffmanTable {
 public:
  static constexpr int kMaxLength = 57;

  HuffmanTable() = default;
  /// Validates the lengths (Kraft sum <= 1, at least one used symbol) and
  /// assigns canonical codes: shorter first, ties by symbol id.
  explicit HuffmanTable(std::vector<std::uint8_t> lengths);

  const std::vector<std::uint8_t>& lengths() const { return lengths_; }
  std::size_t symbols() const { return lengths_.size(); }
  std::uint64_t code(std::uint32_t symbol) const { return codes_[symbol]; }
  int length(std::uint32_t symbol) const { return lengths_[symbol]; }
  bool has(std::uint32_t symbol) const { return symbol < lengths_.size() && lengths_[symbol] != 0; }

  /// Total bits for a histogram coded with this table.
  std::uint64_t coded_bits(std::span<const std::uint64_t> histogram) const;

 private:
  friend std::vector<std::uint32_t> huffman_decode(std::span<const std::uint8_t>, const HuffmanTable&, std::size_t);

  std::vector<std::uint8_t> lengths_;
  std::vector<std::uint64_t> codes_;
  // Canonical decoding: per length, the first code, its rank, and the
  // symbols sorted by (length, id).
  std::vector<std::uint64_t> first_code_;
  std::vector<std::uint32_t> first_rank_;
  std::vector<std::uint32_t> count_;
  std::vector<std::uint32_t> sorted_;
};

std::vector<std::uint64_t> histogram(std::span<const std::uint32_t> symbols, std::size_t alphabet);

/// Two-least merge with ties ordered by (count, node id); leaves are the
/// symbol ids and merged nodes take ids after them. A lone symbol gets length 1.
HuffmanTable huffman_build(std::span<const std::uint64_t> histogram);

/// MSB-first bit packing, zero-padded to a whole byte.
std::vector<std::uint8_t> huffman_encode(std::span<const std::uint32_t> symbols, const HuffmanTable& table);
/// Reads exactly `count` symbols; running out of payload is a truncation error.
std::vector<std::uint32_t> huffman_decode(std::span<const std::uint8_t> payload, const HuffmanTable& table,
                                          std::size_t count);

}  // namespace ncgs
