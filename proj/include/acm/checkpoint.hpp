#pragma once

// "ACMC" checkpoint, little-endian:
//   magic "ACMC" | u8 version | u64 config digest | u32 parameter count
//   per parameter: u16 name length, name, u8 rank, u32 dims..., f64 values...
//   u64 FNV-1a checksum of every preceding byte

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "acm/backbone.hpp"

namespace acm {

inline constexpr std::uint8_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Canonical text of the structural model settings; its hash is the digest.
std::string model_config_text(const BackboneConfig& config);
std::uint64_t config_digest(const BackboneConfig& config);

std::vector<std::byte> encode_checkpoint(const ModelParams& params, const BackboneConfig& config);
ModelParams decode_checkpoint(std::span<const std::byte> bytes, const BackboneConfig& config);

void save_checkpoint(const ModelParams& params, const BackboneConfig& config,
                     const std::filesystem::path& path);
// Throws CheckpointError on a bad magic, version, checksum, digest or layout.
ModelParams load_checkpoint(const std::filesystem::path& path, const BackboneConfig& config);

}  // namespace acm
