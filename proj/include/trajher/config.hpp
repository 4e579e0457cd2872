#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "trajher/trainer.hpp"

namespace trajher {

const char* reward_mode_name(RewardMode mode);
std::optional<RewardMode> reward_mode_from_name(const std::string& name);

/// Canonical flat key=value rendering (env., her., agent., train. sections).
/// parse(serialize(cfg)) reproduces cfg exactly, so digests are stable.
std::string serialize_config(const TrainConfig& cfg);

/// Parses key=value text. '#' starts a comment; blank lines are ignored.
/// Unknown keys and malformed values raise ConfigError naming the line.
TrainConfig parse_config_text(const std::string& text);

/// Reads and parses a config file; a missing file raises ConfigError naming
/// the path.
TrainConfig load_config_file(const std::string& path);

/// FNV-1a over the canonical serialization; stored in checkpoints to detect
/// config drift on resume.
std::uint64_t config_digest(const TrainConfig& cfg);

/// The experiment arms around the asymmetric-HER reward design:
///  final        x-y hindsight relabeling + dense z reward (the method)
///  her-both     hindsight relabeling of the full goal, dense z kept
///  her-standard classic HER: sparse 3-D reward, full-goal relabeling
///  push-only    sparse x-y reward alone; the goal height is ignored
enum class Preset { kFinal, kHerBoth, kHerStandard, kPushOnly };

const char* preset_name(Preset p);
std::optional<Preset> preset_from_name(const std::string& name);
void apply_preset(TrainConfig& cfg, Preset p);
/// "key=value ..." list of the fields the preset overrides.
std::string preset_overrides(Preset p);

}  // namespace trajher
