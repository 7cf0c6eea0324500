#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "sddlab/param_set.hpp"
#include "sddlab/pruning.hpp"

namespace sddlab {

// Parameters and mask after one prune iteration (-1 for the untrained
// initialization).
struct Checkpoint {
  int prune_iter = 0;
  ParamSet<float> params;
  pruning::PruneMask mask;
  nlohmann::json meta = nlohmann::json::object();  // free-form, stored in the manifest
};

// Container layout:
//   "SDDCKPT1" | u64 LE manifest length | manifest JSON | u32 LE CRC-32 of
//   the manifest | payload
// The payload holds each tensor as little-endian f32 values followed by
// each mask as an LSB-first bitset. Every tensor and mask region carries a
// CRC-32 in the manifest.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& origin);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws FormatError naming `path` on a bad magic, truncation or checksum
// mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sddlab
