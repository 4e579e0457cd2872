#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "trajher/agent.hpp"
#include "trajher/env.hpp"
#include "trajher/replay.hpp"
#include "trajher/rollout_log.hpp"

namespace trajher {

struct TrainConfig {
  EnvParams env;
  DRConfig dr;
  HerConfig her;
  AgentConfig agent;
  ExplorationConfig exploration;

  int stage1_epochs = 50;
  int stage2_epochs = 50;
  int cycles_per_epoch = 50;
  int rollouts_per_cycle = 2;
  int updates_per_cycle = 40;
  int batch_size = 256;
  int eval_episodes_per_epoch = 10;
  double exploit_buffer_fraction = 0.1;  // informational target, see README
  double stage1_success_threshold = 0.9;
  int dr_warmup_epochs = 3;
  std::size_t buffer_capacity = 10000;
  int convergence_window = 5;
  double convergence_delta = 0.02;
  std::uint64_t seed = 1;
  bool keep_all_checkpoints = false;

  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;               // 1-based, monotone across stages
  long long env_steps = 0;     // cumulative, 90 x episodes collected
  double train_success_rate = 0.0;
  double eval_success_rate = 0.0;
  double mean_episode_reward = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  std::string stage;
  std::size_t buffer_size = 0;
  double wall_time_s = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const EpochMetrics& m);

enum class PolicyKind { kExploratory, kExploiting };

using PolicyFn = std::function<std::vector<double>(
    std::span<const double> obs, std::span<const double> goal)>;

/// Runs one full 90-step episode and packages it for the replay buffer.
Episode collect_rollout(const DdpgAgent& agent, CubeCarryEnv& env,
                        PolicyKind kind, const ExplorationConfig& exploration,
                        SeededRng& rng);
Episode collect_rollout(const PolicyFn& policy, CubeCarryEnv& env,
                        SeededRng& rng);

/// Deployment heuristic: after `stuck_steps` consecutive steps with the cube
/// more than 2 cm (x-y) from the active goal, the next `random_steps` actions
/// are drawn uniformly. The counter restarts when the goal is reached, when
/// the active goal changes value, or when an injection burst completes.
class StuckRecovery {
 public:
  StuckRecovery(int stuck_steps = 50, int random_steps = 7,
                double xy_threshold = 0.02);

  /// Call before choosing each action; true means inject a random action.
  bool should_inject();
  /// Call after the step with the transition's x-y goal distance.
  void observe(double xy_distance, bool goal_changed);

  int counter() const { return counter_; }

 private:
  int stuck_steps_;
  int random_steps_;
  double xy_threshold_;
  int counter_ = 0;
  int remaining_ = 0;
  bool injected_this_step_ = false;
};

struct ScoreParams {
  double d_xy = 0.39;  // arena x-y range (diameter)
  double d_z = 0.27;   // arena z range
};

/// Competition score: sum over steps of -(0.5*|e_xy|/d_xy + 0.5*|e_z|/d_z).
double score_episode(const RolloutEpisode& episode, const ScoreParams& sp = {});

struct EvalReport {
  double success_rate = 0.0;
  double score_mean = 0.0;
  double score_std = 0.0;  // sample standard deviation
  std::vector<double> scores;
  std::vector<bool> successes;
  std::vector<RolloutEpisode> rollouts;
};

EvalReport evaluate(const PolicyFn& policy, CubeCarryEnv& env, int n_episodes,
                    bool stuck_recovery, SeededRng& rng, RewardMode reward_mode,
                    double reward_a, const ScoreParams& sp = {});
EvalReport evaluate(const DdpgAgent& agent, CubeCarryEnv& env, int n_episodes,
                    bool stuck_recovery, SeededRng& rng);

enum class Stage { kStage1, kStage2Warmup, kStage2, kDone };
const char* stage_name(Stage s);

enum class TrainStatus { kRunning, kConverged, kMaxEpochs };
const char* train_status_name(TrainStatus s);

struct DrSample {
  double push_gain = 0.0;
  double grasp_tolerance = 0.0;
  double cube_half_extent = 0.0;
  double lift_speed_cap = 0.0;
};

/// Serializable snapshot of a Trainer mid-run; the payload of a checkpoint.
struct TrainerSnapshot {
  int epoch = 0;
  int stage = 0;
  int stage_epoch = 0;
  long long env_steps = 0;
  int status = 0;
  std::vector<double> recent_evals;
  std::array<std::uint64_t, 4> rng_state{};

  std::vector<int> actor_layers, critic_layers;
  std::vector<double> actor_params, critic_params;
  std::vector<double> target_actor_params, target_critic_params;
  AdamState actor_adam, critic_adam;
  RunningNormalizer obs_normalizer, goal_normalizer;

  std::uint64_t buffer_capacity = 0;
  std::uint64_t buffer_next = 0;
  std::uint64_t buffer_total_stored = 0;
  std::vector<Episode> episodes;
};

/// Two-stage curriculum driver. Stage 1 trains without domain randomization
/// until the eval success threshold (or the epoch cap); the buffer is then
/// cleared and a few warm-up epochs of DR experience are collected without
/// updates before normal DR training resumes until convergence.
class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg);
  Trainer(const TrainConfig& cfg, const TrainerSnapshot& snapshot);

  EpochMetrics step_epoch();
  bool finished() const { return stage_ == Stage::kDone; }

  TrainStatus status() const { return status_; }
  Stage stage() const { return stage_; }
  int epoch() const { return epoch_; }
  long long env_steps() const { return env_steps_; }

  /// Structured event lines (stage transitions, buffer clears) accumulated
  /// since the last drain.
  std::vector<std::string> drain_events();

  TrainerSnapshot snapshot() const;

  const DdpgAgent& agent() const { return agent_; }
  DdpgAgent& agent() { return agent_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const TrainConfig& config() const { return cfg_; }
  /// Per-episode DR multiplier draws observed while DR was active.
  const std::vector<DrSample>& dr_history() const { return dr_history_; }

 private:
  CubeCarryEnv make_env(bool dr_enabled) const;
  void emit(const std::string& line);
  void advance_stage(double eval_success_rate);

  TrainConfig cfg_;
  SeededRng rng_;
  DdpgAgent agent_;
  ReplayBuffer buffer_;
  Stage stage_ = Stage::kStage1;
  TrainStatus status_ = TrainStatus::kRunning;
  int epoch_ = 0;
  int stage_epoch_ = 0;
  long long env_steps_ = 0;
  std::vector<double> recent_evals_;
  std::vector<std::string> events_;
  std::vector<DrSample> dr_history_;
};

struct TrainResult {
  std::vector<EpochMetrics> metrics;
  std::vector<std::string> events;
  TrainStatus status = TrainStatus::kRunning;
};

struct TrainHooks {
  std::function<void(const EpochMetrics&, Trainer&)> on_epoch;
  std::function<void(const std::string&)> on_event;
};

/// Convenience loop over Trainer::step_epoch until the curriculum finishes.
TrainResult train_curriculum(const TrainConfig& cfg, const TrainHooks& hooks = {});

}  // namespace trajher
