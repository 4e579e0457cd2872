#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "trajher/env.hpp"

namespace trajher {

struct RolloutStep {
  int step = 0;
  std::array<double, kActionDim> action{};
  Vec3 achieved{};
  Vec3 goal{};  // goal active during the transition
  double reward = 0.0;
  bool success = false;
};

/// One evaluated episode as written to / read from a rollout log.
struct RolloutEpisode {
  int episode = 0;
  std::vector<RolloutStep> steps;
};

/// Line-delimited JSON, one step per line:
/// {"episode":0,"step":0,"action":[...],"achieved":[...],"goal":[...],
///  "reward":-1.0,"success":false}
void write_rollout_log(std::ostream& out, const std::vector<RolloutEpisode>& episodes);
void write_rollout_log(const std::string& path, const std::vector<RolloutEpisode>& episodes);

/// Parses a rollout log, grouping lines into episodes. Malformed lines and
/// non-contiguous step indices raise InputError naming the offending line.
std::vector<RolloutEpisode> read_rollout_log(std::istream& in);
std::vector<RolloutEpisode> read_rollout_log(const std::string& path);

}  // namespace trajher
