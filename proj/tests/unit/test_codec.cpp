#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "gradient_checks.hpp"
#include "ncgs/bitstream.hpp"
#include "ncgs/error.hpp"
#include "ncgs/huffman.hpp"
#include "oracles.hpp"

namespace ncgs {
namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kParse;
}

std::vector<std::uint32_t> random_symbols(std::size_t n, std::size_t alphabet, std::uint64_t seed) {
  // geometric-ish skew so code lengths differ
  std::mt19937_64 rng(seed);
  std::geometric_distribution<std::uint32_t> g(0.3);
  std::vector<std::uint32_t> out(n);
  for (auto& s : out) s = std::min<std::uint32_t>(g(rng), static_cast<std::uint32_t>(alphabet - 1));
  return out;
}

CompressedSet sample_set(std::size_t shapes, std::uint64_t seed) {
  const DecoderArch arch = testing::tiny_decoder_arch();
  std::vector<std::vector<float>> features;
  std::vector<std::string> names;
  std::vector<std::uint64_t> sizes;
  for (std::size_t i = 0; i < shapes; ++i) {
    const auto f = testing::random_vector(arch.feature_size(), seed + i, -0.2, 0.2);
    features.emplace_back(f.begin(), f.end());
    names.push_back("shape_" + std::to_string(i));
    sizes.push_back(1000 + i);
  }
  const auto p = testing::random_vector(arch.param_count(), seed + 100, -0.5, 0.5);
  const std::vector<float> params(p.begin(), p.end());
  return Bitstream::quantize(arch, {-1, 1, 8}, {-1, 1, 8}, features, params, names, sizes);
}

TEST(Levels, HandExamples) {
  const QuantSpec q{-1, 1, 2};
  const std::vector<float> v{-1.0f, -0.5f, 0.0f, 0.5f, 1.0f};
  EXPECT_EQ(to_levels(v, q), (std::vector<std::uint32_t>{0, 1, 2, 3, 4}));
  EXPECT_EQ(from_levels(to_levels(v, q), q), v);
}

TEST(Levels, RoundTripOfQuantizedValues) {
  for (int bits : {1, 4, 8, 12}) {
    const QuantSpec q{-0.75, 1.25, bits};
    const auto raw = testing::random_vector(500, static_cast<std::uint64_t>(bits), -2, 2);
    const std::vector<float> rf(raw.begin(), raw.end());
    const auto v = quantize<float>(rf, q);
    const auto levels = to_levels(v, q);
    for (auto l : levels) EXPECT_LE(l, q.max_level());
    EXPECT_EQ(from_levels(levels, q), v);
  }
}

TEST(Levels, OffLatticeIsIntegrityError) {
  const QuantSpec q{-1, 1, 2};
  EXPECT_EQ(code_of([&] { to_levels(std::vector<float>{0.3f}, q); }), ErrorCode::kIntegrity);
  EXPECT_EQ(code_of([&] { to_levels(std::vector<float>{1.5f}, q); }), ErrorCode::kIntegrity);
  EXPECT_EQ(code_of([&] { from_levels(std::vector<std::uint32_t>{5}, q); }), ErrorCode::kIntegrity);
}

TEST(Huffman, TwoEqualSymbols) {
  const std::vector<std::uint64_t> h{1, 1};
  const HuffmanTable t = huffman_build(h);
  EXPECT_EQ(t.lengths(), (std::vector<std::uint8_t>{1, 1}));
  EXPECT_EQ(t.code(0), 0u);
  EXPECT_EQ(t.code(1), 1u);
}

TEST(Huffman, SkewedThreeSymbols) {
  const std::vector<std::uint64_t> h{5, 1, 1};
  const HuffmanTable t = huffman_build(h);
  EXPECT_EQ(t.lengths(), (std::vector<std::uint8_t>{1, 2, 2}));
  EXPECT_EQ(t.code(0), 0b0u);
  EXPECT_EQ(t.code(1), 0b10u);
  EXPECT_EQ(t.code(2), 0b11u);
  EXPECT_EQ(t.coded_bits(h), 9u);
}

TEST(Huffman, SingleSymbolGetsOneBit) {
  const std::vector<std::uint64_t> h{0, 0, 7, 0};
  const HuffmanTable t = huffman_build(h);
  EXPECT_EQ(t.length(2), 1);
  EXPECT_FALSE(t.has(0));
  const std::vector<std::uint32_t> s(7, 2);
  const auto bytes = huffman_encode(s, t);
  EXPECT_EQ(bytes.size(), 1u);
  EXPECT_EQ(huffman_decode(bytes, t, 7), s);
}

TEST(Huffman, AbacPacksIntoOneByte) {
  const std::vector<std::uint32_t> s{0, 1, 0, 2};
  const HuffmanTable t = huffman_build(histogram(s, 3));
  const auto bytes = huffman_encode(s, t);
  ASSERT_EQ(bytes.size(), 1u);
  EXPECT_EQ(bytes[0], 0b01001100);
  EXPECT_EQ(huffman_decode(bytes, t, 4), s);
}

TEST(Huffman, EmptyMessage) {
  const HuffmanTable t = huffman_build(std::vector<std::uint64_t>{1, 2});
  EXPECT_TRUE(huffman_encode(std::vector<std::uint32_t>{}, t).empty());
  EXPECT_TRUE(huffman_decode({}, t, 0).empty());
}

TEST(Huffman, RandomRoundTrips) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t alphabet = 2 + seed * 13;
    const auto s = random_symbols(3000 + seed * 111, alphabet, seed);
    const HuffmanTable t = huffman_build(histogram(s, alphabet));
    const auto bytes = huffman_encode(s, t);
    EXPECT_EQ(bytes.size(), (t.coded_bits(histogram(s, alphabet)) + 7) / 8);
    EXPECT_EQ(huffman_decode(bytes, t, s.size()), s);
  }
}

TEST(Huffman, KraftEqualityAndEntropyBound) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t alphabet = 257;
    const auto s = random_symbols(5000, alphabet, 100 + seed);
    const auto h = histogram(s, alphabet);
    const HuffmanTable t = huffman_build(h);
    double kraft = 0.0, entropy = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < alphabet; ++i) {
      if (h[i] == 0) {
        EXPECT_FALSE(t.has(static_cast<std::uint32_t>(i)));
        continue;
      }
      ++used;
      kraft += std::ldexp(1.0, -t.length(static_cast<std::uint32_t>(i)));
      const double p = static_cast<double>(h[i]) / static_cast<double>(s.size());
      entropy -= p * std::log2(p);
    }
    if (used > 1) EXPECT_NEAR(kraft, 1.0, 1e-12);
    const double avg = static_cast<double>(t.coded_bits(h)) / static_cast<double>(s.size());
    EXPECT_GE(avg, entropy - 1e-12);
    EXPECT_LT(avg, entropy + 1.0);
  }
}

TEST(Huffman, CanonicalCodesArePrefixFree) {
  const auto s = random_symbols(2000, 40, 7);
  const HuffmanTable t = huffman_build(histogram(s, 40));
  for (std::uint32_t i = 0; i < 40; ++i)
    for (std::uint32_t j = 0; j < 40; ++j) {
      if (i == j || !t.has(i) || !t.has(j) || t.length(i) > t.length(j)) continue;
      EXPECT_NE(t.code(j) >> (t.length(j) - t.length(i)), t.code(i)) << i << " prefixes " << j;
    }
}

TEST(Huffman, TruncatedPayload) {
  const auto s = random_symbols(1000, 30, 9);
  const HuffmanTable t = huffman_build(histogram(s, 30));
  auto bytes = huffman_encode(s, t);
  bytes.resize(bytes.size() / 2);
  EXPECT_EQ(code_of([&] { huffman_decode(bytes, t, s.size()); }), ErrorCode::kTruncation);
}

TEST(Huffman, InvalidTables) {
  EXPECT_EQ(code_of([] { HuffmanTable(std::vector<std::uint8_t>{1, 1, 1}); }), ErrorCode::kIntegrity);
  EXPECT_EQ(code_of([] { HuffmanTable(std::vector<std::uint8_t>{0, 0}); }), ErrorCode::kIntegrity);
  EXPECT_THROW(huffman_build(std::vector<std::uint64_t>{0, 0}), Error);
}

TEST(Bitstream, RoundTrip) {
  const CompressedSet set = sample_set(3, 1);
  CompressionReport report;
  const auto bytes = Bitstream::encode(set, &report);
  EXPECT_EQ(report.compressed_bytes, bytes.size());
  EXPECT_EQ(report.original_bytes, 1000u + 1001u + 1002u);
  const CompressedSet back = Bitstream::decode(bytes);
  EXPECT_EQ(back.arch, set.arch);
  EXPECT_EQ(back.feature_quant, set.feature_quant);
  EXPECT_EQ(back.param_quant, set.param_quant);
  EXPECT_EQ(back.features, set.features);
  EXPECT_EQ(back.params, set.params);
  EXPECT_EQ(back.names, set.names);
  EXPECT_EQ(back.source_bytes, set.source_bytes);
}

TEST(Bitstream, HeaderFieldsAndLayout) {
  const CompressedSet set = sample_set(2, 2);
  CompressionReport report;
  const auto bytes = Bitstream::encode(set, &report);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "NCGS");
  EXPECT_EQ(bytes[4], Bitstream::kVersion);
  const BitstreamLayout l = Bitstream::layout(bytes);
  EXPECT_EQ(l.offsets[BitstreamLayout::kFeatures], l.header_bytes);
  EXPECT_EQ(l.offsets[BitstreamLayout::kEnd], bytes.size());
  EXPECT_EQ(l.offsets[1] - l.offsets[0], report.feature_payload_bytes);
  EXPECT_EQ(l.offsets[2] - l.offsets[1], report.param_payload_bytes);
  // one code length per level for each table
  EXPECT_EQ(l.param_table - l.feature_table, set.feature_quant.num_levels());
}

TEST(Bitstream, Deterministic) {
  const CompressedSet set = sample_set(4, 3);
  EXPECT_EQ(Bitstream::encode(set), Bitstream::encode(set));
}

TEST(Bitstream, CorruptionIsDetected) {
  const auto bytes = Bitstream::encode(sample_set(2, 4));
  auto magic = bytes;
  magic[1] = 'X';
  EXPECT_EQ(code_of([&] { Bitstream::decode(magic); }), ErrorCode::kBadMagic);
  auto version = bytes;
  version[4] = 9;
  EXPECT_EQ(code_of([&] { Bitstream::decode(version); }), ErrorCode::kBadVersion);
  const BitstreamLayout l = Bitstream::layout(bytes);
  auto offsets = bytes;
  offsets[l.header_bytes - 32] ^= 0x01;  // feature offset
  EXPECT_EQ(code_of([&] { Bitstream::decode(offsets); }), ErrorCode::kCorruptOffsets);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_EQ(code_of([&] { Bitstream::decode(truncated); }), ErrorCode::kTruncation);
  EXPECT_EQ(code_of([&] { Bitstream::decode(std::vector<std::uint8_t>{'N', 'C'}); }), ErrorCode::kBadMagic);
  for (auto& b : {magic, version, offsets, truncated}) {
    try {
      Bitstream::decode(b);
    } catch (const Error& e) {
      EXPECT_TRUE(e.is_format_error());
    }
  }
}

TEST(Bitstream, RejectsUnquantizedOrMismatchedInput) {
  CompressedSet set = sample_set(2, 5);
  set.params[3] += 1e-3f;
  EXPECT_EQ(code_of([&] { Bitstream::encode(set); }), ErrorCode::kIntegrity);
  set = sample_set(2, 5);
  set.features[1].pop_back();
  EXPECT_EQ(code_of([&] { Bitstream::encode(set); }), ErrorCode::kShape);
  set = sample_set(2, 5);
  set.feature_quant.a = 0.1;
  EXPECT_THROW(Bitstream::encode(set), Error);
}

TEST(Bitstream, FileRoundTrip) {
  testing::TempDir dir("codec");
  const CompressedSet set = sample_set(2, 6);
  const auto report = write_bitstream(set, dir.path() / "x.ncgs");
  EXPECT_EQ(std::filesystem::file_size(dir.path() / "x.ncgs"), report.compressed_bytes);
  EXPECT_EQ(read_bitstream(dir.path() / "x.ncgs").features, set.features);
}

TEST(Bitstream, CompressesBelowRawFloats) {
  const CompressedSet set = sample_set(4, 7);
  const auto bytes = Bitstream::encode(set);
  const std::size_t raw = (set.params.size() + 4 * set.arch.feature_size()) * sizeof(float);
  EXPECT_LT(bytes.size(), raw / 3);
}

}  // namespace
}  // namespace ncgs
