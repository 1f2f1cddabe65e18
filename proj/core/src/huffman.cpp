#include "ncgs/huffman.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <tuple>

#include "ncgs/error.hpp"

namespace ncgs {

std::vector<std::uint32_t> to_levels(std::span<const float> values, const QuantSpec& spec) {
  spec.validate();
  const auto a = static_cast<float>(spec.a);
  const auto s = static_cast<float>(spec.step());
  std::vector<std::uint32_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double idx = std::round((static_cast<double>(values[i]) - a) / s);
    if (!(idx >= 0.0 && idx <= spec.max_level())) {
      fail(ErrorCode::kIntegrity, "value " + std::to_string(values[i]) + " lies outside the quantizer range");
    }
    const auto level = static_cast<std::uint32_t>(idx);
    const float back = static_cast<float>(level) * s + a;
    if (std::abs(static_cast<double>(back) - values[i]) > 1e-9) {
      fail(ErrorCode::kIntegrity, "value " + std::to_string(values[i]) + " is not on the quantization lattice");
    }
    out[i] = level;
  }
  return out;
}

std::vector<float> from_levels(std::span<const std::uint32_t> levels, const QuantSpec& spec) {
  spec.validate();
  const auto a = static_cast<float>(spec.a);
  const auto s = static_cast<float>(spec.step());
  std::vector<float> out(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] > spec.max_level()) fail(ErrorCode::kIntegrity, "level index exceeds 2^N");
    out[i] = static_cast<float>(levels[i]) * s + a;
  }
  return out;
}

HuffmanTable::HuffmanTable(std::vector<std::uint8_t> lengths) : lengths_(std::move(lengths)) {
  int max_len = 0;
  long double kraft = 0.0L;
  for (std::uint8_t l : lengths_) {
    if (l == 0) continue;
    if (l > kMaxLength) fail(ErrorCode::kIntegrity, "Huffman code length " + std::to_string(l) + " too long");
    max_len = std::max<int>(max_len, l);
    kraft += std::ldexp(1.0L, -l);
  }
  if (max_len == 0) fail(ErrorCode::kIntegrity, "Huffman table has no symbols");
  if (kraft > 1.0L) fail(ErrorCode::kIntegrity, "Huffman code lengths violate the Kraft inequality");

  count_.assign(max_len + 1, 0);
  for (std::uint8_t l : lengths_) {
    if (l) ++count_[l];
  }
  first_code_.assign(max_len + 2, 0);
  first_rank_.assign(max_len + 2, 0);
  std::uint64_t code = 0;
  std::uint32_t rank = 0;
  for (int l = 1; l <= max_len; ++l) {
    code = (code + count_[l - 1]) << 1;
    first_code_[l] = code;
    first_rank_[l] = rank;
    rank += count_[l];
  }

  sorted_.clear();
  for (std::uint32_t s = 0; s < lengths_.size(); ++s) {
    if (lengths_[s]) sorted_.push_back(s);
  }
  std::stable_sort(sorted_.begin(), sorted_.end(),
                   [&](std::uint32_t x, std::uint32_t y) { return lengths_[x] < lengths_[y]; });
  codes_.assign(lengths_.size(), 0);
  for (std::uint32_t r = 0; r < sorted_.size(); ++r) {
    const std::uint32_t s = sorted_[r];
    const int l = lengths_[s];
    codes_[s] = first_code_[l] + (r - first_rank_[l]);
  }
}

std::uint64_t HuffmanTable::coded_bits(std::span<const std::uint64_t> hist) const {
  std::uint64_t bits = 0;
  for (std::size_t s = 0; s < hist.size(); ++s) {
    if (hist[s] == 0) continue;
    if (!has(static_cast<std::uint32_t>(s))) fail(ErrorCode::kInvalidArgument, "symbol has no code");
    bits += hist[s] * lengths_[s];
  }
  return bits;
}

std::vector<std::uint64_t> histogram(std::span<const std::uint32_t> symbols, std::size_t alphabet) {
  std::vector<std::uint64_t> hist(alphabet, 0);
  for (std::uint32_t s : symbols) {
    if (s >= alphabet) fail(ErrorCode::kInvalidArgument, "symbol " + std::to_string(s) + " outside the alphabet");
    ++hist[s];
  }
  return hist;
}

HuffmanTable huffman_build(std::span<const std::uint64_t> hist) {
  if (hist.empty()) fail(ErrorCode::kInvalidArgument, "empty histogram");
  const std::size_t n = hist.size();
  std::vector<std::uint32_t> used;
  for (std::uint32_t s = 0; s < n; ++s) {
    if (hist[s]) used.push_back(s);
  }
  if (used.empty()) fail(ErrorCode::kInvalidArgument, "histogram has no nonzero count");

  std::vector<std::uint8_t> lengths(n, 0);
  if (used.size() == 1) {
    lengths[used.front()] = 1;
    return HuffmanTable(std::move(lengths));
  }

  // Node ids: leaves are symbol ids, merged nodes are numbered from n.
  using Entry = std::tuple<std::uint64_t, std::uint64_t>;  // (count, id)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  std::vector<std::uint64_t> parent(n, 0);
  for (std::uint32_t s : used) heap.emplace(hist[s], s);
  std::uint64_t next = n;
  while (heap.size() > 1) {
    const auto [ca, ia] = heap.top();
    heap.pop();
    const auto [cb, ib] = heap.top();
    heap.pop();
    parent.resize(next + 1, 0);
    parent[ia] = next;
    parent[ib] = next;
    heap.emplace(ca + cb, next);
    ++next;
  }
  const std::uint64_t root = std::get<1>(heap.top());
  std::vector<int> depth(parent.size(), 0);
  for (std::uint64_t id = root; id-- > n;) depth[id] = depth[parent[id]] + 1;
  for (std::uint32_t s : used) {
    const int d = depth[parent[s]] + 1;
    if (d > HuffmanTable::kMaxLength) fail(ErrorCode::kInvalidArgument, "Huffman tree too deep");
    lengths[s] = static_cast<std::uint8_t>(d);
  }
  return HuffmanTable(std::move(lengths));
}

std::vector<std::uint8_t> huffman_encode(std::span<const std::uint32_t> symbols, const HuffmanTable& table) {
  std::vector<std::uint8_t> out;
  std::uint64_t acc = 0;
  int filled = 0;
  for (std::uint32_t s : symbols) {
    if (!table.has(s)) fail(ErrorCode::kInvalidArgument, "symbol " + std::to_string(s) + " has no Huffman code");
    const int len = table.length(s);
    const std::uint64_t code = table.code(s);
    for (int b = len - 1; b >= 0; --b) {
      acc = (acc << 1) | ((code >> b) & 1u);
      if (++filled == 8) {
        out.push_back(static_cast<std::uint8_t>(acc));
        acc = 0;
        filled = 0;
      }
    }
  }
  if (filled) out.push_back(static_cast<std::uint8_t>(acc << (8 - filled)));
  return out;
}

std::vector<std::uint32_t> huffman_decode(std::span<const std::uint8_t> payload, const HuffmanTable& table,
                                          std::size_t count) {
  if (table.symbols() == 0) fail(ErrorCode::kIntegrity, "empty Huffman table");
  std::vector<std::uint32_t> out;
  out.reserve(count);
  const int max_len = static_cast<int>(table.count_.size()) - 1;
  const std::size_t total_bits = payload.size() * 8;
  std::size_t bit = 0;
  while (out.size() < count) {
    std::uint64_t code = 0;
    int len = 0;
    for (;;) {
      if (bit >= total_bits) {
        fail(ErrorCode::kTruncation, "payload exhausted after " + std::to_string(out.size()) + " of " +
                                         std::to_string(count) + " symbols");
      }
      code = (code << 1) | ((payload[bit >> 3] >> (7 - (bit & 7))) & 1u);
      ++bit;
      ++len;
      if (len > max_len) fail(ErrorCode::kIntegrity, "invalid Huffman code in payload");
      const std::uint64_t offset = code - table.first_code_[len];
      if (code >= table.first_code_[len] && offset < table.count_[len]) {
        out.push_back(table.sorted_[table.first_rank_[len] + offset]);
        break;
      }
    }
  }
  return out;
}

}  // namespace ncgs
