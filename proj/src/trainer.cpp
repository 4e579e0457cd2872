#include "trajher/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <utility>

#include "trajher/errors.hpp"

namespace trajher {

void TrainConfig::validate() const {
  env.validate();
  dr.validate();
  her.validate();
  agent.validate();
  exploration.validate();
  const int positive[] = {stage1_epochs, cycles_per_epoch, rollouts_per_cycle,
                          batch_size, eval_episodes_per_epoch};
  for (int v : positive) {
    if (v <= 0) throw ConfigError("TrainConfig: counts must be positive");
  }
  if (stage2_epochs < 0 || updates_per_cycle < 0 || dr_warmup_epochs < 0) {
    throw ConfigError("TrainConfig: epoch/update counts must be >= 0");
  }
  if (!(exploit_buffer_fraction >= 0.0 && exploit_buffer_fraction <= 1.0)) {
    throw ConfigError("TrainConfig: exploit_buffer_fraction must lie in [0, 1]");
  }
  if (!(stage1_success_threshold >= 0.0 && stage1_success_threshold <= 1.0)) {
    throw ConfigError("TrainConfig: stage1_success_threshold must lie in [0, 1]");
  }
  if (buffer_capacity == 0) throw ConfigError("TrainConfig: buffer_capacity must be >= 1");
  if (convergence_window <= 0) throw ConfigError("TrainConfig: convergence_window must be >= 1");
  if (convergence_delta < 0.0) throw ConfigError("TrainConfig: convergence_delta must be >= 0");
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

double episode_total_reward(const Episode& ep, const HerConfig& her) {
  double total = 0.0;
  for (int t = 0; t < Episode::kSteps; ++t) {
    total += compute_reward(ep.achieved(t + 1), ep.desired(t), her.reward_mode,
                            her.reward_a);
  }
  return total;
}

std::vector<double> uniform_action(SeededRng& rng) {
  std::vector<double> a(kActionDim);
  for (double& v : a) v = rng.uniform(-1.0, 1.0);
  return a;
}

}  // namespace

std::string metrics_csv_header() {
  return "epoch,env_steps,train_success_rate,eval_success_rate,"
         "mean_episode_reward,critic_loss,actor_loss,stage,buffer_size,"
         "wall_time_s";
}

std::string metrics_csv_row(const EpochMetrics& m) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%d,%lld,%s,%s,%s,%s,%s,%s,%zu,%.3f", m.epoch,
                m.env_steps, format_double(m.train_success_rate).c_str(),
                format_double(m.eval_success_rate).c_str(),
                format_double(m.mean_episode_reward).c_str(),
                format_double(m.critic_loss).c_str(),
                format_double(m.actor_loss).c_str(), m.stage.c_str(),
                m.buffer_size, m.wall_time_s);
  return buf;
}

Episode collect_rollout(const PolicyFn& policy, CubeCarryEnv& env,
                        SeededRng& rng) {
  Episode ep;
  ep.observations.reserve((Episode::kSteps + 1) * kObservationDim);
  ep.actions.reserve(Episode::kSteps * kActionDim);
  ep.achieved_goals.reserve((Episode::kSteps + 1) * 3);
  ep.desired_goals.reserve(Episode::kSteps * 3);
  ep.segment_ids.reserve(Episode::kSteps);

  Observation obs = env.reset(rng);
  ep.observations.insert(ep.observations.end(), obs.begin(), obs.end());
  const Vec3& start = env.state().cube_pos;
  ep.achieved_goals.insert(ep.achieved_goals.end(), start.begin(), start.end());

  for (int t = 0; t < Episode::kSteps; ++t) {
    const Vec3 goal = env.active_goal();
    const std::vector<double> action = policy(obs, {goal.data(), goal.size()});
    StepResult res = env.step(action, rng);
    ep.actions.insert(ep.actions.end(), action.begin(), action.end());
    ep.desired_goals.insert(ep.desired_goals.end(), goal.begin(), goal.end());
    ep.segment_ids.push_back(t / kSegmentSteps);
    ep.achieved_goals.insert(ep.achieved_goals.end(), res.achieved_goal.begin(),
                             res.achieved_goal.end());
    ep.observations.insert(ep.observations.end(), res.observation.begin(),
                           res.observation.end());
    obs = std::move(res.observation);
  }
  return ep;
}

Episode collect_rollout(const DdpgAgent& agent, CubeCarryEnv& env,
                        PolicyKind kind, const ExplorationConfig& exploration,
                        SeededRng& rng) {
  if (kind == PolicyKind::kExploiting) {
    return collect_rollout(
        [&agent](std::span<const double> obs, std::span<const double> goal) {
          return agent.act_exploit(obs, goal);
        },
        env, rng);
  }
  return collect_rollout(
      [&agent, &rng, &exploration](std::span<const double> obs,
                                   std::span<const double> goal) {
        return agent.act_explore(obs, goal, rng, exploration);
      },
      env, rng);
}

StuckRecovery::StuckRecovery(int stuck_steps, int random_steps,
                             double xy_threshold)
    : stuck_steps_(stuck_steps), random_steps_(random_steps),
      xy_threshold_(xy_threshold) {}

bool StuckRecovery::should_inject() {
  injected_this_step_ = false;
  if (remaining_ > 0) {
    --remaining_;
    injected_this_step_ = true;
    return true;
  }
  if (counter_ >= stuck_steps_) {
    remaining_ = random_steps_ - 1;
    injected_this_step_ = true;
    return true;
  }
  return false;
}

void StuckRecovery::observe(double xy_distance, bool goal_changed) {
  if (injected_this_step_) {
    if (remaining_ == 0) counter_ = 0;  // burst complete, start fresh
    injected_this_step_ = false;
    return;
  }
  if (goal_changed || xy_distance <= xy_threshold_) {
    counter_ = 0;
  } else {
    counter_ += 1;
  }
}

double score_episode(const RolloutEpisode& episode, const ScoreParams& sp) {
  if (episode.steps.empty()) {
    throw InputError("score_episode: episode has no steps");
  }
  if (!(sp.d_xy > 0.0 && sp.d_z > 0.0)) {
    throw ConfigError("score_episode: range normalizers must be positive");
  }
  double score = 0.0;
  for (const RolloutStep& s : episode.steps) {
    const double e_xy = norm_xy(s.achieved, s.goal);
    const double e_z = std::abs(s.achieved[2] - s.goal[2]);
    score -= 0.5 * e_xy / sp.d_xy + 0.5 * e_z / sp.d_z;
  }
  return score;
}

EvalReport evaluate(const PolicyFn& policy, CubeCarryEnv& env, int n_episodes,
                    bool stuck_recovery, SeededRng& rng, RewardMode reward_mode,
                    double reward_a, const ScoreParams& sp) {
  if (n_episodes <= 0) throw ConfigError("evaluate: n_episodes must be >= 1");
  EvalReport report;
  report.rollouts.reserve(n_episodes);

  for (int e = 0; e < n_episodes; ++e) {
    Observation obs = env.reset(rng);
    StuckRecovery stuck;
    RolloutEpisode rec;
    rec.episode = e;
    rec.steps.reserve(Episode::kSteps);
    Vec3 prev_goal = env.active_goal();

    for (int t = 0; t < Episode::kSteps; ++t) {
      const Vec3 goal = env.active_goal();
      const bool goal_changed = t > 0 && goal != prev_goal;
      const bool inject = stuck_recovery && stuck.should_inject();
      const std::vector<double> action =
          inject ? uniform_action(rng) : policy(obs, {goal.data(), goal.size()});
      StepResult res = env.step(action, rng);

      RolloutStep step;
      step.step = t;
      std::copy(action.begin(), action.end(), step.action.begin());
      step.achieved = res.achieved_goal;
      step.goal = goal;
      step.reward = compute_reward(res.achieved_goal, goal, reward_mode, reward_a);
      step.success = res.info.success;
      rec.steps.push_back(step);

      if (stuck_recovery) stuck.observe(res.info.xy_distance, goal_changed);
      prev_goal = goal;
      obs = std::move(res.observation);
    }

    const bool success =
        is_success(rec.steps.back().achieved, env.state().trajectory.final_goal());
    const double score = score_episode(rec, sp);
    report.successes.push_back(success);
    report.scores.push_back(score);
    report.rollouts.push_back(std::move(rec));
  }

  int hits = 0;
  for (bool s : report.successes) hits += s ? 1 : 0;
  report.success_rate = static_cast<double>(hits) / n_episodes;
  double mean = 0.0;
  for (double s : report.scores) mean += s;
  mean /= n_episodes;
  report.score_mean = mean;
  if (n_episodes > 1) {
    double ss = 0.0;
    for (double s : report.scores) ss += (s - mean) * (s - mean);
    report.score_std = std::sqrt(ss / (n_episodes - 1));
  }
  return report;
}

EvalReport evaluate(const DdpgAgent& agent, CubeCarryEnv& env, int n_episodes,
                    bool stuck_recovery, SeededRng& rng) {
  return evaluate(
      [&agent](std::span<const double> obs, std::span<const double> goal) {
        return agent.act_exploit(obs, goal);
      },
      env, n_episodes, stuck_recovery, rng, agent.config().reward_mode,
      agent.config().reward_a, ScoreParams{});
}

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::kStage1: return "stage1";
    case Stage::kStage2Warmup: return "stage2_warmup";
    case Stage::kStage2: return "stage2";
    case Stage::kDone: return "done";
  }
  return "unknown";
}

const char* train_status_name(TrainStatus s) {
  switch (s) {
    case TrainStatus::kRunning: return "running";
    case TrainStatus::kConverged: return "converged";
    case TrainStatus::kMaxEpochs: return "max_epochs";
  }
  return "unknown";
}

namespace {

TrainConfig normalized_config(TrainConfig cfg) {
  // The reward mode lives with the HER settings; mirror it into the agent so
  // the critic target clip matches the reward range.
  cfg.agent.reward_mode = cfg.her.reward_mode;
  cfg.agent.reward_a = cfg.her.reward_a;
  cfg.agent.max_height = cfg.env.max_height;
  cfg.validate();
  return cfg;
}

DdpgAgent make_agent(const TrainConfig& cfg, SeededRng& rng) {
  return DdpgAgent(kObservationDim, kGoalDim, kActionDim, cfg.agent, rng);
}

}  // namespace

Trainer::Trainer(const TrainConfig& cfg)
    : cfg_(normalized_config(cfg)), rng_(cfg_.seed), agent_(make_agent(cfg_, rng_)),
      buffer_(cfg_.buffer_capacity) {}

Trainer::Trainer(const TrainConfig& cfg, const TrainerSnapshot& snap)
    : cfg_(normalized_config(cfg)), rng_(cfg_.seed), agent_(make_agent(cfg_, rng_)),
      buffer_(snap.buffer_capacity, snap.episodes, snap.buffer_next,
              snap.buffer_total_stored) {
  if (snap.actor_layers != agent_.actor.layer_sizes ||
      snap.critic_layers != agent_.critic.layer_sizes) {
    throw ConfigError("Trainer: snapshot network shape does not match config");
  }
  agent_.actor.params = snap.actor_params;
  agent_.critic.params = snap.critic_params;
  agent_.target_actor.params = snap.target_actor_params;
  agent_.target_critic.params = snap.target_critic_params;
  agent_.actor_adam = snap.actor_adam;
  agent_.critic_adam = snap.critic_adam;
  agent_.obs_normalizer = snap.obs_normalizer;
  agent_.goal_normalizer = snap.goal_normalizer;
  rng_.set_state(snap.rng_state);
  epoch_ = snap.epoch;
  stage_ = static_cast<Stage>(snap.stage);
  stage_epoch_ = snap.stage_epoch;
  env_steps_ = snap.env_steps;
  status_ = static_cast<TrainStatus>(snap.status);
  recent_evals_ = snap.recent_evals;
}

TrainerSnapshot Trainer::snapshot() const {
  TrainerSnapshot s;
  s.epoch = epoch_;
  s.stage = static_cast<int>(stage_);
  s.stage_epoch = stage_epoch_;
  s.env_steps = env_steps_;
  s.status = static_cast<int>(status_);
  s.recent_evals = recent_evals_;
  s.rng_state = rng_.state();
  s.actor_layers = agent_.actor.layer_sizes;
  s.critic_layers = agent_.critic.layer_sizes;
  s.actor_params = agent_.actor.params;
  s.critic_params = agent_.critic.params;
  s.target_actor_params = agent_.target_actor.params;
  s.target_critic_params = agent_.target_critic.params;
  s.actor_adam = agent_.actor_adam;
  s.critic_adam = agent_.critic_adam;
  s.obs_normalizer = agent_.obs_normalizer;
  s.goal_normalizer = agent_.goal_normalizer;
  s.buffer_capacity = buffer_.capacity();
  s.buffer_next = buffer_.ring_next();
  s.buffer_total_stored = buffer_.total_stored();
  s.episodes.reserve(buffer_.size());
  for (std::size_t i = 0; i < buffer_.size(); ++i) {
    s.episodes.push_back(buffer_.episode(i));
  }
  return s;
}

CubeCarryEnv Trainer::make_env(bool dr_enabled) const {
  DRConfig dr = cfg_.dr;
  dr.enabled = dr_enabled;
  return CubeCarryEnv(cfg_.env, dr);
}

void Trainer::emit(const std::string& line) { events_.push_back(line); }

std::vector<std::string> Trainer::drain_events() {
  return std::exchange(events_, {});
}

EpochMetrics Trainer::step_epoch() {
  if (finished()) throw StateError("step_epoch: training already finished");
  const auto start = std::chrono::steady_clock::now();

  const bool dr_on = stage_ != Stage::kStage1;
  const bool updates_enabled = stage_ != Stage::kStage2Warmup;
  CubeCarryEnv env = make_env(dr_on);

  int episodes_collected = 0;
  int train_hits = 0;
  double reward_sum = 0.0;
  double critic_loss_sum = 0.0;
  double actor_loss_sum = 0.0;
  int update_calls = 0;

  auto absorb = [&](Episode ep) {
    if (dr_on) {
      const EnvParams& p = env.episode_params();
      dr_history_.push_back(
          {p.push_gain, p.grasp_tolerance, p.cube_half_extent, p.lift_speed_cap});
    }
    reward_sum += episode_total_reward(ep, cfg_.her);
    agent_.update_normalizers(ep);
    buffer_.store(std::move(ep));
    ++episodes_collected;
  };

  for (int cycle = 0; cycle < cfg_.cycles_per_epoch; ++cycle) {
    for (int r = 0; r < cfg_.rollouts_per_cycle; ++r) {
      Episode ep = collect_rollout(agent_, env, PolicyKind::kExploratory,
                                   cfg_.exploration, rng_);
      train_hits += ep.final_success() ? 1 : 0;
      absorb(std::move(ep));
    }
    if (updates_enabled && cfg_.updates_per_cycle > 0) {
      std::vector<TransitionBatch> batches;
      batches.reserve(cfg_.updates_per_cycle);
      for (int u = 0; u < cfg_.updates_per_cycle; ++u) {
        batches.push_back(sample_batch(buffer_, cfg_.batch_size, cfg_.her, rng_));
      }
      DdpgAgent::UpdateStats stats = agent_.update(batches);
      critic_loss_sum += stats.critic_loss_mean;
      actor_loss_sum += stats.actor_loss_mean;
      ++update_calls;
    }
  }

  int eval_hits = 0;
  for (int e = 0; e < cfg_.eval_episodes_per_epoch; ++e) {
    Episode ep = collect_rollout(agent_, env, PolicyKind::kExploiting,
                                 cfg_.exploration, rng_);
    eval_hits += ep.final_success() ? 1 : 0;
    absorb(std::move(ep));
  }

  env_steps_ += static_cast<long long>(Episode::kSteps) * episodes_collected;
  epoch_ += 1;
  stage_epoch_ += 1;

  EpochMetrics m;
  m.epoch = epoch_;
  m.env_steps = env_steps_;
  m.train_success_rate = static_cast<double>(train_hits) /
                         (cfg_.cycles_per_epoch * cfg_.rollouts_per_cycle);
  m.eval_success_rate =
      static_cast<double>(eval_hits) / cfg_.eval_episodes_per_epoch;
  m.mean_episode_reward = reward_sum / episodes_collected;
  m.critic_loss = update_calls > 0 ? critic_loss_sum / update_calls : 0.0;
  m.actor_loss = update_calls > 0 ? actor_loss_sum / update_calls : 0.0;
  m.stage = stage_name(stage_);
  m.buffer_size = buffer_.size();

  advance_stage(m.eval_success_rate);

  m.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return m;
}

void Trainer::advance_stage(double eval_success_rate) {
  char buf[160];
  switch (stage_) {
    case Stage::kStage1: {
      const bool hit = eval_success_rate >= cfg_.stage1_success_threshold;
      const bool maxed = stage_epoch_ >= cfg_.stage1_epochs;
      if (!hit && !maxed) return;
      if (cfg_.stage2_epochs == 0) {
        status_ = hit ? TrainStatus::kConverged : TrainStatus::kMaxEpochs;
        stage_ = Stage::kDone;
        std::snprintf(buf, sizeof(buf), "epoch=%d event=training_complete status=%s",
                      epoch_, train_status_name(status_));
        emit(buf);
        return;
      }
      const Stage next =
          cfg_.dr_warmup_epochs > 0 ? Stage::kStage2Warmup : Stage::kStage2;
      std::snprintf(buf, sizeof(buf),
                    "epoch=%d event=stage_transition from=stage1 to=%s reason=%s",
                    epoch_, stage_name(next),
                    hit ? "success_threshold" : "max_epochs");
      emit(buf);
      std::snprintf(buf, sizeof(buf), "epoch=%d event=buffer_clear", epoch_);
      emit(buf);
      buffer_.clear();
      stage_ = next;
      stage_epoch_ = 0;
      recent_evals_.clear();
      return;
    }
    case Stage::kStage2Warmup: {
      if (stage_epoch_ < cfg_.dr_warmup_epochs) return;
      std::snprintf(buf, sizeof(buf),
                    "epoch=%d event=stage_transition from=stage2_warmup to=stage2 "
                    "reason=warmup_complete",
                    epoch_);
      emit(buf);
      stage_ = Stage::kStage2;
      stage_epoch_ = 0;
      recent_evals_.clear();
      return;
    }
    case Stage::kStage2: {
      recent_evals_.push_back(eval_success_rate);
      bool converged = false;
      if (static_cast<int>(recent_evals_.size()) >= cfg_.convergence_window) {
        const auto first = recent_evals_.end() - cfg_.convergence_window;
        const auto [lo, hi] = std::minmax_element(first, recent_evals_.end());
        converged = (*hi - *lo) < cfg_.convergence_delta;
      }
      const bool maxed = stage_epoch_ >= cfg_.stage2_epochs;
      if (!converged && !maxed) return;
      status_ = converged ? TrainStatus::kConverged : TrainStatus::kMaxEpochs;
      stage_ = Stage::kDone;
      std::snprintf(buf, sizeof(buf), "epoch=%d event=training_complete status=%s",
                    epoch_, train_status_name(status_));
      emit(buf);
      return;
    }
    case Stage::kDone:
      return;
  }
}

TrainResult train_curriculum(const TrainConfig& cfg, const TrainHooks& hooks) {
  Trainer trainer(cfg);
  TrainResult result;
  while (!trainer.finished()) {
    EpochMetrics m = trainer.step_epoch();
    for (std::string& e : trainer.drain_events()) {
      if (hooks.on_event) hooks.on_event(e);
      result.events.push_back(std::move(e));
    }
    if (hooks.on_epoch) hooks.on_epoch(m, trainer);
    result.metrics.push_back(std::move(m));
  }
  result.status = trainer.status();
  return result;
}

}  // namespace trajher
