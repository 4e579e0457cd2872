#pragma once

#include <span>
#include <vector>

#include "trajher/env.hpp"
#include "trajher/numerics.hpp"
#include "trajher/replay.hpp"

namespace trajher {

struct ExplorationConfig {
  double random_action_probability = 0.3;
  double gaussian_noise_std = 0.2;

  void validate() const;
};

struct AgentConfig {
  double gamma = 0.98;
  double polyak = 0.95;  // retention factor for target networks
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double action_l2 = 1.0;  // coefficient on mean squared action magnitude
  double normalizer_clip = 5.0;
  double normalizer_eps_std = 1e-2;
  std::vector<int> hidden_sizes{256, 256, 256};
  RewardMode reward_mode = RewardMode::kFull;
  double reward_a = 20.0;
  double max_height = 0.27;  // sets the critic target clip for kFull

  void validate() const;
};

/// DDPG actor-critic with polyak-averaged target networks and running
/// input normalizers. The actor maps [obs, goal] to a tanh-bounded action;
/// the critic maps [obs, goal, action] to a scalar value.
class DdpgAgent {
 public:
  DdpgAgent(int obs_dim, int goal_dim, int action_dim, AgentConfig cfg,
            SeededRng& rng);

  std::vector<double> act_exploit(std::span<const double> obs,
                                  std::span<const double> goal) const;
  /// Uniform random action with probability cfg.random_action_probability,
  /// otherwise the exploiting action plus clipped Gaussian noise.
  std::vector<double> act_explore(std::span<const double> obs,
                                  std::span<const double> goal, SeededRng& rng,
                                  const ExplorationConfig& cfg) const;

  struct LossResult {
    double loss = 0.0;
    std::vector<double> param_grads;
  };

  /// Mean squared Bellman error; targets come from the polyak-averaged
  /// networks with next_goal (== goal) and are clipped to [target_clip_lo, 0].
  LossResult critic_loss(const TransitionBatch& batch) const;
  /// -mean Q(s, g, pi(s, g)) + action_l2 * mean(pi^2); gradients flow
  /// through the critic into the actor parameters only.
  LossResult actor_loss(const TransitionBatch& batch) const;

  struct UpdateStats {
    double critic_loss_mean = 0.0;
    double actor_loss_mean = 0.0;
  };

  /// One Adam step on the critic then on the actor per batch; a single
  /// polyak update of both targets after the last batch.
  UpdateStats update(std::span<const TransitionBatch> batches);

  /// Folds a collected rollout into the input normalizers (observations and
  /// the goals that were active during collection; relabeled data never
  /// reaches the normalizers).
  void update_normalizers(const Episode& episode);

  double target_clip_lo() const;

  int obs_dim() const { return obs_dim_; }
  int goal_dim() const { return goal_dim_; }
  int action_dim() const { return action_dim_; }
  const AgentConfig& config() const { return cfg_; }

  // Mutable access for serialization and tests.
  Mlp actor, critic, target_actor, target_critic;
  AdamState actor_adam, critic_adam;
  RunningNormalizer obs_normalizer, goal_normalizer;

 private:
  RowMatrix normalized_inputs(const RowMatrix& obs, const RowMatrix& goal) const;

  int obs_dim_, goal_dim_, action_dim_;
  AgentConfig cfg_;
};

}  // namespace trajher
