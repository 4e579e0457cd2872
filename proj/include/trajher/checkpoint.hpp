#pragma once

#include <cstdint>
#include <string>

#include "trajher/trainer.hpp"

namespace trajher {

inline constexpr char kCheckpointMagic[8] = {'T', 'R', 'A', 'J',
                                             'H', 'E', 'R', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Single-file binary checkpoint: magic, version, config digest, then
/// length-prefixed little-endian sections (config text, run counters, agent
/// parameters and optimizer/normalizer state, RNG state, replay buffer).
/// Restoring one resumes training bitwise.
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t config_digest = 0;
  std::string config_text;
  TrainerSnapshot trainer;
};

/// Writes to a temp file in the target directory, then renames into place.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace trajher
