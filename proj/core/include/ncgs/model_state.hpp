#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ncgs/train.hpp"

namespace ncgs {

/// Checkpoint of a ModelState: "NCGM", version u8, the architecture, both
/// quantizers, then raw f32 features and parameters, the ADAM moments and
/// step counts, the epoch counter, the f64 loss history, and per-shape names
/// with source byte counts.
inline constexpr char kModelMagic[4] = {'N', 'C', 'G', 'M'};
inline constexpr std::uint8_t kModelVersion = 1;

std::vector<std::uint8_t> serialize_model(const ModelState& state);
ModelState deserialize_model(std::span<const std::uint8_t> bytes);

void write_model(const ModelState& state, const std::filesystem::path& path);
ModelState read_model(const std::filesystem::path& path);

}  // namespace ncgs
