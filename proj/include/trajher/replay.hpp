#pragma once

#include <cstddef>
#include <vector>

#include "trajher/env.hpp"
#include "trajher/numerics.hpp"

namespace trajher {

/// One complete 90-step rollout. achieved_goals has one extra row (the
/// initial cube position); rewards are never stored, they are recomputed at
/// sample time.
struct Episode {
  std::vector<double> observations;   // (T+1) x kObservationDim
  std::vector<double> actions;        // T x kActionDim
  std::vector<double> achieved_goals; // (T+1) x 3
  std::vector<double> desired_goals;  // T x 3
  std::vector<int> segment_ids;       // T, in [0, kNumSegments)

  static constexpr int kSteps = kEpisodeSteps;

  std::span<const double> observation(int t) const;
  std::span<const double> action(int t) const;
  Vec3 achieved(int t) const;   // t in [0, T]
  Vec3 desired(int t) const;    // t in [0, T)

  bool final_success() const;
  void validate() const;
};

/// HER sampling policy. With relabel_z=false the substituted goal keeps the
/// original z component (only the x-y reward can be rewritten in hindsight);
/// relabel_z=true substitutes the whole goal. segment_restricted limits the
/// future-goal pool to the 30-step window in which the original goal was
/// active.
struct HerConfig {
  double relabel_probability = 0.8;
  bool segment_restricted = true;
  bool relabel_z = false;
  RewardMode reward_mode = RewardMode::kFull;
  double reward_a = 20.0;

  void validate() const;
};

/// Fixed-capacity FIFO episode store.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity_episodes);
  /// Rebuild from checkpointed contents, preserving ring position.
  ReplayBuffer(std::size_t capacity_episodes, std::vector<Episode> episodes,
               std::size_t ring_next, std::size_t total_stored);

  void store(Episode episode);
  void clear();

  std::size_t size() const { return episodes_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t total_stored() const { return total_stored_; }
  std::size_t ring_next() const { return next_; }
  bool empty() const { return episodes_.empty(); }
  const Episode& episode(std::size_t i) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;        // ring insertion slot
  std::size_t total_stored_ = 0;
  std::vector<Episode> episodes_;
};

struct TransitionBatch {
  RowMatrix obs;        // B x kObservationDim
  RowMatrix goal;       // B x 3
  RowMatrix action;     // B x kActionDim
  Eigen::VectorXd reward;
  RowMatrix next_obs;   // B x kObservationDim
  RowMatrix next_goal;  // B x 3, always equal to goal

  Eigen::Index size() const { return obs.rows(); }
};

/// Provenance of one sampled transition, for tests and audits.
struct SampleInfo {
  std::size_t episode_index = 0;
  int t = 0;                // transition index within the episode
  bool relabeled = false;
  int source_index = -1;    // achieved_goals index the goal came from
};

/// Samples transitions uniformly over stored episodes and steps, applies
/// hindsight relabeling per `her`, and recomputes every reward from the
/// achieved goal at t+1 against the (possibly relabeled) goal.
TransitionBatch sample_batch(const ReplayBuffer& buffer, int batch_size,
                             const HerConfig& her, SeededRng& rng,
                             std::vector<SampleInfo>* info = nullptr);

/// Reward of a stored transition under an arbitrary goal.
double recompute_reward(const Episode& episode, int t, const Vec3& goal,
                        const HerConfig& her);

}  // namespace trajher
