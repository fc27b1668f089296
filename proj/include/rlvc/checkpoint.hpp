#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rlvc/nn.hpp"

namespace rlvc::nn {

// Little-endian layout:
//   "RLVC" | u32 version | u32 kind | u32 layer count L | (L+1) x u32 widths
//   | f64 leaky slope | per layer: weight (row-major, out x in), bias (out)
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class NetKind : std::uint32_t {
    Generic = 0,
    Generator = 1,
    CriticX0 = 2,
    CriticXt = 3,
    RewardModel = 4,
};

const char* to_string(NetKind kind);

std::vector<std::uint8_t> encode_checkpoint(const DenseNet& net, NetKind kind);

struct DecodedCheckpoint {
    NetKind kind = NetKind::Generic;
    DenseNet net;
};

/// Throws IoError on truncated or malformed input.
DecodedCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const DenseNet& net, NetKind kind, const std::filesystem::path& path);
/// Throws ConfigError if the stored kind differs from `expected`.
DenseNet load_checkpoint(const std::filesystem::path& path, NetKind expected);

}  // namespace rlvc::nn
