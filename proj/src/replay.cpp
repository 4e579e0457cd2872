#include "trajher/replay.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "trajher/errors.hpp"

namespace trajher {

std::span<const double> Episode::observation(int t) const {
  return {observations.data() + static_cast<std::size_t>(t) * kObservationDim,
          kObservationDim};
}

std::span<const double> Episode::action(int t) const {
  return {actions.data() + static_cast<std::size_t>(t) * kActionDim, kActionDim};
}

Vec3 Episode::achieved(int t) const {
  const std::size_t o = static_cast<std::size_t>(t) * 3;
  return {achieved_goals[o], achieved_goals[o + 1], achieved_goals[o + 2]};
}

Vec3 Episode::desired(int t) const {
  const std::size_t o = static_cast<std::size_t>(t) * 3;
  return {desired_goals[o], desired_goals[o + 1], desired_goals[o + 2]};
}

bool Episode::final_success() const {
  return is_success(achieved(kSteps), desired(kSteps - 1));
}

void Episode::validate() const {
  const std::size_t T = kSteps;
  if (observations.size() != (T + 1) * kObservationDim ||
      actions.size() != T * kActionDim ||
      achieved_goals.size() != (T + 1) * 3 || desired_goals.size() != T * 3 ||
      segment_ids.size() != T) {
    throw InputError("Episode: inconsistent field lengths");
  }
  for (int t = 0; t < static_cast<int>(T); ++t) {
    const int expected = t / kSegmentSteps;
    if (segment_ids[t] != expected) {
      throw InputError("Episode: segment id mismatch at step " + std::to_string(t));
    }
    if (t % kSegmentSteps != 0) {
      const Vec3 a = desired(t);
      const Vec3 b = desired(t - 1);
      if (a != b) {
        throw InputError("Episode: desired goal changed inside segment at step " +
                         std::to_string(t));
      }
    }
  }
}

void HerConfig::validate() const {
  if (!(relabel_probability >= 0.0 && relabel_probability <= 1.0)) {
    throw ConfigError("HerConfig: relabel_probability must lie in [0, 1]");
  }
  if (!(reward_a > 0.0)) {
    throw ConfigError("HerConfig: reward_a must be > 0");
  }
}

ReplayBuffer::ReplayBuffer(std::size_t capacity_episodes)
    : capacity_(capacity_episodes) {
  if (capacity_ == 0) throw ConfigError("ReplayBuffer: capacity must be >= 1");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity_episodes,
                           std::vector<Episode> episodes, std::size_t ring_next,
                           std::size_t total_stored)
    : ReplayBuffer(capacity_episodes) {
  if (episodes.size() > capacity_ || ring_next >= std::max<std::size_t>(capacity_, 1)) {
    throw ConfigError("ReplayBuffer: restore state does not fit capacity");
  }
  episodes_ = std::move(episodes);
  next_ = ring_next;
  total_stored_ = total_stored;
}

void ReplayBuffer::store(Episode episode) {
  episode.validate();
  if (episodes_.size() < capacity_) {
    episodes_.push_back(std::move(episode));
  } else {
    episodes_[next_] = std::move(episode);
    next_ = (next_ + 1) % capacity_;
  }
  total_stored_ += 1;
}

void ReplayBuffer::clear() {
  episodes_.clear();
  next_ = 0;
}

const Episode& ReplayBuffer::episode(std::size_t i) const {
  if (i >= episodes_.size()) throw StateError("ReplayBuffer: episode index out of range");
  return episodes_[i];
}

double recompute_reward(const Episode& episode, int t, const Vec3& goal,
                        const HerConfig& her) {
  return compute_reward(episode.achieved(t + 1), goal, her.reward_mode,
                        her.reward_a);
}

TransitionBatch sample_batch(const ReplayBuffer& buffer, int batch_size,
                             const HerConfig& her, SeededRng& rng,
                             std::vector<SampleInfo>* info) {
  her.validate();
  if (buffer.empty()) throw StateError("sample_batch: replay buffer is empty");
  if (batch_size <= 0) throw ConfigError("sample_batch: batch_size must be >= 1");

  TransitionBatch batch;
  batch.obs.resize(batch_size, kObservationDim);
  batch.goal.resize(batch_size, 3);
  batch.action.resize(batch_size, kActionDim);
  batch.reward.resize(batch_size);
  batch.next_obs.resize(batch_size, kObservationDim);
  batch.next_goal.resize(batch_size, 3);
  if (info) {
    info->clear();
    info->reserve(batch_size);
  }

  for (int b = 0; b < batch_size; ++b) {
    const std::size_t ep_idx =
        std::min(static_cast<std::size_t>(rng.uniform() * buffer.size()),
                 buffer.size() - 1);
    const Episode& ep = buffer.episode(ep_idx);
    const int t = std::min(static_cast<int>(rng.uniform() * Episode::kSteps),
                           Episode::kSteps - 1);

    Vec3 goal = ep.desired(t);
    SampleInfo rec;
    rec.episode_index = ep_idx;
    rec.t = t;

    if (rng.uniform() < her.relabel_probability) {
      // Future achieved goals eligible as substitutes: achieved_goals indices
      // strictly after t, capped at the last transition index of t's segment
      // (or of the episode when unrestricted). A transition on the final step
      // of its window has no eligible future and keeps its original goal.
      const int segment_end = her.segment_restricted
                                  ? (ep.segment_ids[t] + 1) * kSegmentSteps - 1
                                  : Episode::kSteps;
      if (segment_end > t) {
        const int span = segment_end - t;  // candidates t+1 .. segment_end
        const int source =
            t + 1 + std::min(static_cast<int>(rng.uniform() * span), span - 1);
        const Vec3 future = ep.achieved(source);
        goal[0] = future[0];
        goal[1] = future[1];
        if (her.relabel_z) goal[2] = future[2];
        rec.relabeled = true;
        rec.source_index = source;
      }
    }

    const double reward = recompute_reward(ep, t, goal, her);

    const auto obs = ep.observation(t);
    const auto next_obs = ep.observation(t + 1);
    const auto action = ep.action(t);
    for (int i = 0; i < kObservationDim; ++i) {
      batch.obs(b, i) = obs[i];
      batch.next_obs(b, i) = next_obs[i];
    }
    for (int i = 0; i < kActionDim; ++i) batch.action(b, i) = action[i];
    for (int i = 0; i < 3; ++i) {
      batch.goal(b, i) = goal[i];
      batch.next_goal(b, i) = goal[i];  // g_{t+1} = g_t, always
    }
    batch.reward(b) = reward;
    if (info) info->push_back(rec);
  }
  return batch;
}

}  // namespace trajher
