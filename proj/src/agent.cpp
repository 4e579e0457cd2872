#include "trajher/agent.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "trajher/errors.hpp"

namespace trajher {

void ExplorationConfig::validate() const {
  if (!(random_action_probability >= 0.0 && random_action_probability <= 1.0)) {
    throw ConfigError("ExplorationConfig: random_action_probability must lie in [0, 1]");
  }
  if (gaussian_noise_std < 0.0) {
    throw ConfigError("ExplorationConfig: gaussian_noise_std must be >= 0");
  }
}

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("AgentConfig: gamma must lie in [0, 1)");
  if (!(polyak >= 0.0 && polyak <= 1.0)) throw ConfigError("AgentConfig: polyak must lie in [0, 1]");
  if (!(actor_lr > 0.0 && critic_lr > 0.0)) throw ConfigError("AgentConfig: learning rates must be > 0");
  if (action_l2 < 0.0) throw ConfigError("AgentConfig: action_l2 must be >= 0");
  if (hidden_sizes.empty()) throw ConfigError("AgentConfig: need at least one hidden layer");
  for (int h : hidden_sizes) {
    if (h <= 0) throw ConfigError("AgentConfig: hidden sizes must be positive");
  }
  if (!(reward_a > 0.0)) throw ConfigError("AgentConfig: reward_a must be > 0");
}

namespace {

std::vector<int> layer_plan(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes;
  sizes.reserve(hidden.size() + 2);
  sizes.push_back(in);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

DdpgAgent::DdpgAgent(int obs_dim, int goal_dim, int action_dim, AgentConfig cfg,
                     SeededRng& rng)
    : obs_dim_(obs_dim), goal_dim_(goal_dim), action_dim_(action_dim),
      cfg_(std::move(cfg)) {
  cfg_.validate();
  actor = Mlp::init(layer_plan(obs_dim_ + goal_dim_, cfg_.hidden_sizes, action_dim_),
                    OutputActivation::kTanh, rng);
  critic = Mlp::init(
      layer_plan(obs_dim_ + goal_dim_ + action_dim_, cfg_.hidden_sizes, 1),
      OutputActivation::kIdentity, rng);
  target_actor = actor;
  target_critic = critic;
  actor_adam = AdamState::init(actor.param_count(), cfg_.actor_lr);
  critic_adam = AdamState::init(critic.param_count(), cfg_.critic_lr);
  obs_normalizer = RunningNormalizer(obs_dim_, cfg_.normalizer_clip, cfg_.normalizer_eps_std);
  goal_normalizer = RunningNormalizer(goal_dim_, cfg_.normalizer_clip, cfg_.normalizer_eps_std);
}

double DdpgAgent::target_clip_lo() const {
  const double worst_step_reward =
      cfg_.reward_mode == RewardMode::kFull
          ? 1.0 + cfg_.reward_a * cfg_.max_height
          : 1.0;
  return -worst_step_reward / (1.0 - cfg_.gamma);
}

RowMatrix DdpgAgent::normalized_inputs(const RowMatrix& obs,
                                       const RowMatrix& goal) const {
  RowMatrix o = obs;
  RowMatrix g = goal;
  obs_normalizer.normalize_rows_inplace(o);
  goal_normalizer.normalize_rows_inplace(g);
  RowMatrix joined(obs.rows(), obs_dim_ + goal_dim_);
  joined << o, g;
  return joined;
}

std::vector<double> DdpgAgent::act_exploit(std::span<const double> obs,
                                           std::span<const double> goal) const {
  if (static_cast<int>(obs.size()) != obs_dim_ ||
      static_cast<int>(goal.size()) != goal_dim_) {
    throw ConfigError("act_exploit: observation/goal dimension mismatch");
  }
  std::vector<double> input = obs_normalizer.normalize(obs);
  std::vector<double> g = goal_normalizer.normalize(goal);
  input.insert(input.end(), g.begin(), g.end());
  return forward(actor, input);
}

std::vector<double> DdpgAgent::act_explore(std::span<const double> obs,
                                           std::span<const double> goal,
                                           SeededRng& rng,
                                           const ExplorationConfig& cfg) const {
  cfg.validate();
  if (rng.uniform() < cfg.random_action_probability) {
    std::vector<double> action(action_dim_);
    for (double& a : action) a = rng.uniform(-1.0, 1.0);
    return action;
  }
  std::vector<double> action = act_exploit(obs, goal);
  apply_noise(action, cfg.gaussian_noise_std, rng, true);
  return action;
}

DdpgAgent::LossResult DdpgAgent::critic_loss(const TransitionBatch& batch) const {
  const Eigen::Index n = batch.size();
  if (!batch.reward.allFinite() || !batch.obs.allFinite() ||
      !batch.action.allFinite()) {
    throw NumericalError("critic_loss: non-finite values in batch");
  }

  // Bootstrapped targets from the polyak-averaged networks.
  RowMatrix next_in = normalized_inputs(batch.next_obs, batch.next_goal);
  RowMatrix next_action = forward_batch(target_actor, next_in);
  RowMatrix next_q_in(n, next_in.cols() + action_dim_);
  next_q_in << next_in, next_action;
  RowMatrix next_q = forward_batch(target_critic, next_q_in);

  const double lo = target_clip_lo();
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    target(i) = std::clamp(batch.reward(i) + cfg_.gamma * next_q(i, 0), lo, 0.0);
  }

  RowMatrix q_in(n, obs_dim_ + goal_dim_ + action_dim_);
  q_in << normalized_inputs(batch.obs, batch.goal), batch.action;
  ForwardCache cache;
  RowMatrix q = forward_batch(critic, q_in, &cache);

  LossResult result;
  RowMatrix upstream(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double err = q(i, 0) - target(i);
    result.loss += err * err;
    upstream(i, 0) = 2.0 * err / static_cast<double>(n);
  }
  result.loss /= static_cast<double>(n);
  result.param_grads = backward_batch(critic, cache, upstream).param_grads;
  return result;
}

DdpgAgent::LossResult DdpgAgent::actor_loss(const TransitionBatch& batch) const {
  const Eigen::Index n = batch.size();
  if (!batch.obs.allFinite()) {
    throw NumericalError("actor_loss: non-finite values in batch");
  }
  RowMatrix in = normalized_inputs(batch.obs, batch.goal);
  ForwardCache actor_cache;
  RowMatrix action = forward_batch(actor, in, &actor_cache);

  RowMatrix q_in(n, in.cols() + action_dim_);
  q_in << in, action;
  ForwardCache critic_cache;
  RowMatrix q = forward_batch(critic, q_in, &critic_cache);

  LossResult result;
  result.loss = -q.col(0).mean() +
                cfg_.action_l2 * action.array().square().mean();

  // dL/dQ = -1/n; pull the gradient back through the critic to the action
  // inputs, add the regularizer term, then push through the actor.
  RowMatrix upstream = RowMatrix::Constant(n, 1, -1.0 / static_cast<double>(n));
  RowMatrix dq_in = backward_batch(critic, critic_cache, upstream).input_grads;
  RowMatrix d_action = dq_in.rightCols(action_dim_);
  d_action += (2.0 * cfg_.action_l2 /
               static_cast<double>(n * action_dim_)) * action;
  result.param_grads = backward_batch(actor, actor_cache, d_action).param_grads;
  return result;
}

DdpgAgent::UpdateStats DdpgAgent::update(std::span<const TransitionBatch> batches) {
  if (batches.empty()) throw ConfigError("update: need at least one batch");
  UpdateStats stats;
  for (const TransitionBatch& batch : batches) {
    LossResult c = critic_loss(batch);
    adam_step(critic.params, c.param_grads, critic_adam);
    LossResult a = actor_loss(batch);
    adam_step(actor.params, a.param_grads, actor_adam);
    stats.critic_loss_mean += c.loss;
    stats.actor_loss_mean += a.loss;
  }
  stats.critic_loss_mean /= static_cast<double>(batches.size());
  stats.actor_loss_mean /= static_cast<double>(batches.size());
  polyak_update(target_actor.params, actor.params, cfg_.polyak);
  polyak_update(target_critic.params, critic.params, cfg_.polyak);
  return stats;
}

void DdpgAgent::update_normalizers(const Episode& episode) {
  for (int t = 0; t <= Episode::kSteps; ++t) {
    obs_normalizer.update(episode.observation(t));
  }
  for (int t = 0; t < Episode::kSteps; ++t) {
    const Vec3 g = episode.desired(t);
    goal_normalizer.update(std::span<const double>(g.data(), 3));
  }
}

}  // namespace trajher
