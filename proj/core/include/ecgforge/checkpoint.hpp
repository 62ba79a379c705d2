#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ecgforge/network.hpp"

namespace ecgforge::nn {

/// Versioned binary checkpoint: magic "ECGF", u16 format version, a layer
/// manifest (kinds and shapes), then every parameter and running statistic
/// as little-endian float64 in manifest order. Checkpoints are
/// self-describing: load_checkpoint rebuilds the network from the manifest,
/// load_checkpoint_into validates the manifest against an existing one.
inline constexpr std::uint16_t kCheckpointVersion = 1;

void save_checkpoint(const Network& network, std::ostream& out);
void save_checkpoint(const Network& network, const std::filesystem::path& path);

Network load_checkpoint(std::istream& in);
Network load_checkpoint(const std::filesystem::path& path);

void load_checkpoint_into(Network& network, std::istream& in);
void load_checkpoint_into(Network& network, const std::filesystem::path& path);

std::vector<std::uint8_t> checkpoint_bytes(const Network& network);

/// Raw bytes of the trunk's parameters and running statistics, for
/// byte-exact preservation checks across head swaps.
std::vector<std::uint8_t> trunk_bytes(Network& network);

}  // namespace ecgforge::nn
