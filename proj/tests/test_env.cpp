#include <doctest.h>

#include <cmath>
#include <vector>

#include "trajher/env.hpp"
#include "trajher/errors.hpp"
#include "oracles.hpp"
#include "scripted.hpp"

using namespace trajher;

namespace {

std::vector<double> zero_action() { return std::vector<double>(kActionDim, 0.0); }

GoalTrajectory fixed_trajectory(const Vec3& g0, const Vec3& g1, const Vec3& g2) {
  GoalTrajectory t;
  t.goals = {g0, g1, g2};
  return t;
}

EnvState held_state(const EnvParams& p, const Vec3& cube) {
  // Two effectors pinching the cube from opposite x sides at cube-top height.
  EnvState s;
  const double h = p.cube_half_extent;
  s.cube_pos = cube;
  s.prev_cube_pos = cube;
  s.effector_pos[0] = {cube[0] + h + 0.006, cube[1], cube[2] + h};
  s.effector_pos[1] = {cube[0] - h - 0.006, cube[1], cube[2] + h};
  s.effector_pos[2] = {0.12, -0.12, 0.08};
  s.held = true;
  s.step_index = 0;
  s.trajectory = fixed_trajectory({0, 0, h}, {0, 0, h}, {0, 0, h});
  return s;
}

}  // namespace

TEST_SUITE("env") {

TEST_CASE("reset: same seed gives identical states and observations") {
  CubeCarryEnv env_a({}, {}), env_b({}, {});
  SeededRng rng_a(123), rng_b(123);
  const Observation obs_a = env_a.reset(rng_a);
  const Observation obs_b = env_b.reset(rng_b);
  CHECK(obs_a == obs_b);
  CHECK(env_a.state().cube_pos == env_b.state().cube_pos);
  CHECK(env_a.state().trajectory.goals == env_b.state().trajectory.goals);
}

TEST_CASE("reset: cube spawns on the floor inside the arena margin") {
  CubeCarryEnv env({}, {});
  SeededRng rng(5);
  const EnvParams& p = env.base_params();
  double sum_x = 0.0, sum_y = 0.0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    env.reset(rng);
    const Vec3& c = env.state().cube_pos;
    CHECK(std::hypot(c[0], c[1]) <= p.arena_radius - p.cube_half_extent + 1e-12);
    CHECK(c[2] == p.cube_half_extent);
    sum_x += c[0];
    sum_y += c[1];
  }
  CHECK(std::abs(sum_x / n) <= 0.02);  // uniform-disk mean is the origin
  CHECK(std::abs(sum_y / n) <= 0.02);
}

TEST_CASE("reset: goals respect arena and height limits") {
  CubeCarryEnv env({}, {});
  SeededRng rng(6);
  const EnvParams& p = env.base_params();
  int floor_goals = 0, total = 0;
  for (int i = 0; i < 500; ++i) {
    env.reset(rng);
    for (const Vec3& g : env.state().trajectory.goals) {
      CHECK(std::hypot(g[0], g[1]) <= p.arena_radius - p.cube_half_extent + 1e-12);
      CHECK(g[2] >= p.cube_half_extent);
      CHECK(g[2] <= p.goal_z_max);
      floor_goals += g[2] == p.cube_half_extent ? 1 : 0;
      ++total;
    }
  }
  // floor_goal_prob=0.25 plus the density-zero chance of drawing the floor.
  const double frac = static_cast<double>(floor_goals) / total;
  CHECK(frac > 0.18);
  CHECK(frac < 0.32);
}

TEST_CASE("step: zero action with no contact leaves the cube in place") {
  CubeCarryEnv env({}, {});
  SeededRng rng(9);
  env.reset_with(fixed_trajectory({0.1, 0, 0.0325}, {0.1, 0, 0.0325},
                                  {0.1, 0, 0.0325}),
                 {0.0, 0.0, 0.0325});
  const Vec3 before = env.state().cube_pos;
  const StepResult res = env.step(zero_action(), rng);
  CHECK(env.state().cube_pos == before);
  CHECK(res.achieved_goal == before);
  CHECK_FALSE(res.info.held);
  // cube delta in the observation is zero
  CHECK(res.observation[30] == 0.0);
  CHECK(res.observation[31] == 0.0);
  CHECK(res.observation[32] == 0.0);
}

TEST_CASE("step: carried cube rises by the lift cap when commanded up fast") {
  const EnvParams p{};
  CubeCarryEnv env(p, {});
  SeededRng rng(1);
  env.reset_with(fixed_trajectory({0, 0, 0.15}, {0, 0, 0.15}, {0, 0, 0.15}),
                 {0.0, 0.0, p.cube_half_extent});
  env.set_state(held_state(p, {0.0, 0.0, p.cube_half_extent}));

  // Straight up at full speed: effectors rise v_max*dt = 0.015, the cube is
  // capped at lift_speed_cap*dt = 0.01.
  std::vector<double> up(kActionDim, 0.0);
  up[2] = up[5] = 1.0;
  const double z_before = env.state().cube_pos[2];
  const StepResult res = env.step(up, rng);
  CHECK(res.info.held);
  CHECK(env.state().cube_pos[2] ==
        doctest::Approx(z_before + p.lift_speed_cap * p.dt).epsilon(1e-12));
}

TEST_CASE("step: broken grasp drops the cube by gravity_drop*dt") {
  const EnvParams p{};
  CubeCarryEnv env(p, {});
  SeededRng rng(1);
  env.reset_with(fixed_trajectory({0, 0, 0.15}, {0, 0, 0.15}, {0, 0, 0.15}),
                 {0.0, 0.0, p.cube_half_extent});
  EnvState s = held_state(p, {0.0, 0.0, 0.2});
  // Effectors nowhere near the cube: the hysteresis check fails this step.
  s.effector_pos[0] = {0.15, 0.0, 0.08};
  s.effector_pos[1] = {-0.15, 0.0, 0.08};
  env.set_state(s);

  const StepResult res = env.step(zero_action(), rng);
  CHECK_FALSE(res.info.held);
  CHECK(env.state().cube_pos[2] ==
        doctest::Approx(0.2 - p.gravity_drop * p.dt).epsilon(1e-12));

  // From just above the floor the same drop clamps at the resting height.
  s = held_state(p, {0.0, 0.0, p.cube_half_extent + 0.01});
  s.effector_pos[0] = {0.15, 0.0, 0.08};
  s.effector_pos[1] = {-0.15, 0.0, 0.08};
  env.set_state(s);
  env.step(zero_action(), rng);
  CHECK(env.state().cube_pos[2] == doctest::Approx(p.cube_half_extent));
}

TEST_CASE("step: pushing moves the cube away from an intruding effector") {
  const EnvParams p{};
  CubeCarryEnv env(p, {});
  SeededRng rng(1);
  env.reset_with(fixed_trajectory({0.1, 0, 0.0325}, {0.1, 0, 0.0325},
                                  {0.1, 0, 0.0325}),
                 {0.0, 0.0, p.cube_half_extent});
  EnvState s = env.state();
  // Effector 0 just outside the -x face at cube height, moving +x.
  s.effector_pos[0] = {-p.cube_half_extent - 0.01, 0.0, p.cube_half_extent};
  env.set_state(s);
  std::vector<double> push(kActionDim, 0.0);
  push[0] = 1.0;  // +x at v_max -> 0.015 m, penetrating the footprint
  env.step(push, rng);
  CHECK(env.state().cube_pos[0] > 0.0);
  CHECK(env.state().cube_pos[2] == p.cube_half_extent);
}

TEST_CASE("step: rejects wrong length and non-finite actions") {
  CubeCarryEnv env({}, {});
  SeededRng rng(2);
  env.reset(rng);
  CHECK_THROWS_AS(env.step(std::vector<double>(3, 0.0), rng), InputError);
  std::vector<double> bad(kActionDim, 0.0);
  bad[4] = std::nan("");
  CHECK_THROWS_AS(env.step(bad, rng), InputError);
}

TEST_CASE("compute_reward: combined reward at the goal is zero") {
  CHECK(compute_reward({0.01, 0.0, 0.0325}, {0.0, 0.0, 0.0325},
                       RewardMode::kFull, 20.0) == 0.0);
}

TEST_CASE("compute_reward: the 2 cm x-y threshold is inclusive") {
  CHECK(compute_reward({0.02, 0.0, 0.1}, {0.0, 0.0, 0.1}, RewardMode::kFull,
                       20.0) == 0.0);
  CHECK(compute_reward({0.020000001, 0.0, 0.1}, {0.0, 0.0, 0.1},
                       RewardMode::kFull, 20.0) == -1.0);
}

TEST_CASE("compute_reward: asymmetric z slopes, a=20") {
  // 0.1 m below the goal: -20 * 0.1; 0.1 m above: -10 * 0.1.
  const double below = compute_reward({0.0, 0.0, 0.0325}, {0.0, 0.0, 0.1325},
                                      RewardMode::kFull, 20.0);
  CHECK(below == doctest::Approx(-2.0).epsilon(1e-12));
  const double above = compute_reward({0.0, 0.0, 0.2325}, {0.0, 0.0, 0.1325},
                                      RewardMode::kFull, 20.0);
  CHECK(above == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("compute_reward: push_only ignores z, sparse3d does not") {
  CHECK(compute_reward({0.0, 0.0, 0.0325}, {0.0, 0.0, 0.15},
                       RewardMode::kPushOnly, 20.0) == 0.0);
  CHECK(compute_reward({0.0, 0.0, 0.0325}, {0.0, 0.0, 0.15},
                       RewardMode::kSparse3d, 20.0) == -1.0);
  CHECK(compute_reward({0.005, 0.0, 0.151}, {0.0, 0.0, 0.15},
                       RewardMode::kSparse3d, 20.0) == 0.0);
}

TEST_CASE("compute_reward: agrees with a direct transcription of the formulas") {
  SeededRng rng(31);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 achieved{rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                        rng.uniform(0.0325, 0.27)};
    const Vec3 goal{rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                    rng.uniform(0.0325, 0.15)};
    const double expected = test::reference_reward_xy(achieved, goal) +
                            test::reference_reward_z(achieved, goal, 20.0);
    CHECK(compute_reward(achieved, goal, RewardMode::kFull, 20.0) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("reward bounds: full mode stays within [-1 - a*max_height, 0]") {
  SeededRng rng(32);
  const EnvParams p{};
  const double lo = -1.0 - 20.0 * p.max_height;
  for (int i = 0; i < 2000; ++i) {
    const Vec3 achieved{rng.uniform(-0.19, 0.19), rng.uniform(-0.19, 0.19),
                        rng.uniform(p.cube_half_extent, p.max_height)};
    const Vec3 goal{rng.uniform(-0.19, 0.19), rng.uniform(-0.19, 0.19),
                    rng.uniform(p.cube_half_extent, p.goal_z_max)};
    const double r = compute_reward(achieved, goal, RewardMode::kFull, 20.0);
    CHECK(r <= 0.0);
    CHECK(r >= lo);
  }
}

TEST_CASE("is_success: 3-D convention at 2 cm") {
  CHECK(is_success({0.05, -0.07, 0.1}, {0.05, -0.07, 0.1}));
  CHECK_FALSE(is_success({0.021, 0.0, 0.1}, {0.0, 0.0, 0.1}));
  // x-y on target but 3 cm of height error fails the 3-D convention.
  CHECK_FALSE(is_success({0.0, 0.0, 0.13}, {0.0, 0.0, 0.1}));
}

TEST_CASE("apply_noise: sigma 0 is the identity and draws nothing") {
  SeededRng rng(3), ref(3);
  std::vector<double> v{0.1, -0.2, 0.3};
  const std::vector<double> before = v;
  apply_noise(v, 0.0, rng, true);
  CHECK(v == before);
  CHECK(rng.next_u64() == ref.next_u64());
}

TEST_CASE("apply_noise: sample std matches sigma within 2%") {
  SeededRng rng(4);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    std::vector<double> v{0.0};
    apply_noise(v, 0.1, rng, false);
    sum += v[0];
    sum_sq += v[0] * v[0];
  }
  const double mean = sum / n;
  const double std = std::sqrt(sum_sq / n - mean * mean);
  CHECK(std == doctest::Approx(0.1).epsilon(0.02));
}

TEST_CASE("apply_noise: noisy actions never leave [-1, 1]") {
  SeededRng rng(5);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> v(kActionDim, rng.uniform(-1.0, 1.0));
    apply_noise(v, 0.5, rng, true);
    for (double a : v) {
      CHECK(a <= 1.0);
      CHECK(a >= -1.0);
    }
  }
}

TEST_CASE("containment: positions stay inside the arena under random actions") {
  CubeCarryEnv env({}, {});
  SeededRng rng(77);
  const EnvParams& p = env.base_params();
  env.reset(rng);
  for (int t = 0; t < kEpisodeSteps; ++t) {
    std::vector<double> action(kActionDim);
    for (double& a : action) a = rng.uniform(-1.0, 1.0);
    env.step(action, rng);
    const EnvState& s = env.state();
    CHECK(std::hypot(s.cube_pos[0], s.cube_pos[1]) <=
          p.arena_radius - p.cube_half_extent + 1e-9);
    CHECK(s.cube_pos[2] >= p.cube_half_extent - 1e-12);
    CHECK(s.cube_pos[2] <= p.max_height + 1e-12);
    for (const Vec3& e : s.effector_pos) {
      CHECK(std::hypot(e[0], e[1]) <= p.arena_radius + 1e-9);
    }
  }
  CHECK(env.done());
}

TEST_CASE("goal schedule: active goal index is step/30, three segments") {
  CubeCarryEnv env({}, {});
  SeededRng rng(8);
  env.reset(rng);
  const GoalTrajectory traj = env.state().trajectory;
  for (int t = 0; t < kEpisodeSteps; ++t) {
    CHECK(env.active_goal() == traj.goals[static_cast<std::size_t>(t / 30)]);
    env.step(zero_action(), rng);
  }
}

TEST_CASE("determinism: seed and action sequence fix the trajectory") {
  CubeCarryEnv env_a({}, {}), env_b({}, {});
  SeededRng rng_a(55), rng_b(55), action_rng(56);
  env_a.reset(rng_a);
  env_b.reset(rng_b);
  for (int t = 0; t < kEpisodeSteps; ++t) {
    std::vector<double> action(kActionDim);
    for (double& a : action) a = action_rng.uniform(-1.0, 1.0);
    const StepResult ra = env_a.step(action, rng_a);
    const StepResult rb = env_b.step(action, rng_b);
    CHECK(ra.observation == rb.observation);
    CHECK(ra.achieved_goal == rb.achieved_goal);
  }
}

TEST_CASE("reachability: the scripted policy lifts the cube to a mid-air goal") {
  const EnvParams p{};
  CubeCarryEnv env(p, {});
  SeededRng rng(1);
  const Vec3 goal{0.05, 0.04, 0.12};
  env.reset_with(fixed_trajectory(goal, goal, goal), {-0.05, -0.03, p.cube_half_extent});
  const test::ScriptedCarryPolicy policy(p);

  Observation obs = env.reset_with(fixed_trajectory(goal, goal, goal),
                                   {-0.05, -0.03, p.cube_half_extent});
  bool lifted = false;
  StepResult last;
  for (int t = 0; t < kEpisodeSteps; ++t) {
    const Vec3 g = env.active_goal();
    last = env.step(policy.act(obs, {g.data(), 3}), rng);
    obs = last.observation;
    lifted = lifted || env.state().cube_pos[2] > 0.1;
  }
  CHECK(lifted);
  CHECK(is_success(last.achieved_goal, goal));
}

TEST_CASE("dr: per-episode parameters resample inside the ranges") {
  DRConfig dr;
  dr.enabled = true;
  CubeCarryEnv env({}, dr);
  SeededRng rng(13);
  const EnvParams& base = env.base_params();
  double min_gain = 1e9, max_gain = -1e9;
  for (int i = 0; i < 200; ++i) {
    env.reset(rng);
    const EnvParams& eff = env.episode_params();
    CHECK(eff.push_gain >= base.push_gain * dr.push_gain.lo);
    CHECK(eff.push_gain <= base.push_gain * dr.push_gain.hi);
    CHECK(eff.cube_half_extent >= base.cube_half_extent * dr.cube_half_extent.lo);
    CHECK(eff.cube_half_extent <= base.cube_half_extent * dr.cube_half_extent.hi);
    min_gain = std::min(min_gain, eff.push_gain);
    max_gain = std::max(max_gain, eff.push_gain);
  }
  CHECK(max_gain > min_gain);  // actually randomized
}

TEST_CASE("dr: degenerate ranges and zero noise reproduce the plain env") {
  DRConfig degenerate;
  degenerate.enabled = true;
  degenerate.push_gain = {1.0, 1.0};
  degenerate.grasp_tolerance = {1.0, 1.0};
  degenerate.cube_half_extent = {1.0, 1.0};
  degenerate.lift_speed_cap = {1.0, 1.0};
  degenerate.action_noise = 0.0;
  degenerate.observation_noise = 0.0;

  CubeCarryEnv dr_env({}, degenerate);
  CubeCarryEnv plain({}, {});
  SeededRng rng_a(99), rng_b(99), action_rng(100);
  Observation obs_a = dr_env.reset(rng_a);
  Observation obs_b = plain.reset(rng_b);
  CHECK(obs_a == obs_b);
  for (int t = 0; t < kEpisodeSteps; ++t) {
    std::vector<double> action(kActionDim);
    for (double& a : action) a = action_rng.uniform(-1.0, 1.0);
    CHECK(dr_env.step(action, rng_a).observation ==
          plain.step(action, rng_b).observation);
  }
}

TEST_CASE("config validation: bad geometry and ranges are rejected") {
  EnvParams p;
  p.dt = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  DRConfig dr;
  dr.push_gain = {1.1, 1.2};  // does not contain 1.0
  CHECK_THROWS_AS(dr.validate(), ConfigError);
  dr = DRConfig{};
  dr.action_noise = -0.1;
  CHECK_THROWS_AS(dr.validate(), ConfigError);
}

}  // TEST_SUITE
