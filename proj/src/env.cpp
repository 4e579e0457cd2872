#include "trajher/env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trajher/errors.hpp"

namespace trajher {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kXySuccessRadius = 0.02;  // 2 cm threshold
constexpr double kCos120 = -0.5;

double sign_or_positive(double v) { return v >= 0.0 ? 1.0 : -1.0; }

/// Euclidean distance from a point to an axis-aligned cube surface
/// (zero inside the cube).
double box_surface_distance(const Vec3& p, const Vec3& center, double half) {
  double acc = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double d = std::max(std::abs(p[k] - center[k]) - half, 0.0);
    acc += d * d;
  }
  return std::sqrt(acc);
}

void clamp_radial(double& x, double& y, double max_radius) {
  const double r = std::hypot(x, y);
  if (r > max_radius) {
    const double s = max_radius / r;
    x *= s;
    y *= s;
  }
}

void check_range(const Range& r, const char* name) {
  if (!(r.lo <= 1.0 && 1.0 <= r.hi)) {
    throw ConfigError(std::string("DRConfig: range for ") + name +
                      " must contain 1.0");
  }
}

}  // namespace

double norm_xy(const Vec3& a, const Vec3& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

double norm_3d(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) +
                   (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

void EnvParams::validate() const {
  const double positive[] = {arena_radius, cube_half_extent, dt,    v_max,
                             grasp_tolerance, push_gain,     gravity_drop,
                             lift_speed_cap,  max_height,    home_radius,
                             home_z};
  for (double v : positive) {
    if (!(v > 0.0)) throw ConfigError("EnvParams: all physical values must be positive");
  }
  if (!(floor_goal_prob >= 0.0 && floor_goal_prob <= 1.0)) {
    throw ConfigError("EnvParams: floor_goal_prob must lie in [0, 1]");
  }
  if (!(goal_z_max >= cube_half_extent && goal_z_max <= max_height)) {
    throw ConfigError("EnvParams: goal_z_max must lie in [cube_half_extent, max_height]");
  }
  if (!(cube_half_extent < arena_radius)) {
    throw ConfigError("EnvParams: cube must fit inside the arena");
  }
}

void DRConfig::validate() const {
  check_range(push_gain, "push_gain");
  check_range(grasp_tolerance, "grasp_tolerance");
  check_range(cube_half_extent, "cube_half_extent");
  check_range(lift_speed_cap, "lift_speed_cap");
  if (action_noise < 0.0 || observation_noise < 0.0) {
    throw ConfigError("DRConfig: noise sigmas must be >= 0");
  }
}

double compute_reward(const Vec3& achieved, const Vec3& goal, RewardMode mode,
                      double a) {
  if (!(a > 0.0)) throw ConfigError("compute_reward: a must be > 0");
  switch (mode) {
    case RewardMode::kSparse3d:
      return norm_3d(achieved, goal) <= kXySuccessRadius ? 0.0 : -1.0;
    case RewardMode::kPushOnly:
      return norm_xy(achieved, goal) <= kXySuccessRadius ? 0.0 : -1.0;
    case RewardMode::kFull: {
      const double r_xy =
          norm_xy(achieved, goal) <= kXySuccessRadius ? 0.0 : -1.0;
      const double dz = achieved[2] - goal[2];
      double r_z = 0.0;
      if (dz < 0.0) {
        r_z = -a * std::abs(dz);
      } else if (dz > 0.0) {
        r_z = -(a / 2.0) * std::abs(dz);
      }
      return r_xy + r_z;
    }
  }
  throw ConfigError("compute_reward: unknown reward mode");
}

bool is_success(const Vec3& achieved, const Vec3& goal) {
  return norm_3d(achieved, goal) <= kXySuccessRadius;
}

void apply_noise(std::span<double> values, double sigma, SeededRng& rng,
                 bool clip_to_unit) {
  if (sigma < 0.0) throw ConfigError("apply_noise: sigma must be >= 0");
  if (sigma == 0.0) return;
  for (double& v : values) {
    v += sigma * rng.normal();
    if (clip_to_unit) v = std::clamp(v, -1.0, 1.0);
  }
}

CubeCarryEnv::CubeCarryEnv(EnvParams params, DRConfig dr)
    : base_(params), effective_(params), dr_(dr) {
  base_.validate();
  dr_.validate();
  state_.step_index = kEpisodeSteps;  // requires reset before stepping
}

void CubeCarryEnv::place_effectors_home() {
  for (int e = 0; e < kNumEffectors; ++e) {
    const double angle = kTwoPi * e / kNumEffectors;
    state_.effector_pos[e] = {base_.home_radius * std::cos(angle),
                              base_.home_radius * std::sin(angle), base_.home_z};
    state_.effector_vel[e] = {0.0, 0.0, 0.0};
  }
}

Observation CubeCarryEnv::finish_reset() {
  state_.prev_cube_pos = state_.cube_pos;
  state_.prev_action.fill(0.0);
  state_.held = false;
  state_.step_index = 0;
  return make_observation();
}

Observation CubeCarryEnv::reset(SeededRng& rng) {
  effective_ = base_;
  if (dr_.enabled) {
    effective_.push_gain *= rng.uniform(dr_.push_gain.lo, dr_.push_gain.hi);
    effective_.grasp_tolerance *=
        rng.uniform(dr_.grasp_tolerance.lo, dr_.grasp_tolerance.hi);
    effective_.cube_half_extent *=
        rng.uniform(dr_.cube_half_extent.lo, dr_.cube_half_extent.hi);
    effective_.lift_speed_cap *=
        rng.uniform(dr_.lift_speed_cap.lo, dr_.lift_speed_cap.hi);
  }
  place_effectors_home();

  const double half = effective_.cube_half_extent;
  const double spawn_radius = base_.arena_radius - half;
  {
    const double r = spawn_radius * std::sqrt(rng.uniform());
    const double theta = kTwoPi * rng.uniform();
    state_.cube_pos = {r * std::cos(theta), r * std::sin(theta), half};
  }
  for (auto& goal : state_.trajectory.goals) {
    const double r = spawn_radius * std::sqrt(rng.uniform());
    const double theta = kTwoPi * rng.uniform();
    const double z = rng.uniform(half, base_.goal_z_max);
    const double u_floor = rng.uniform();
    goal = {r * std::cos(theta), r * std::sin(theta),
            u_floor < base_.floor_goal_prob ? half : z};
  }

  Observation obs = finish_reset();
  if (dr_.enabled) apply_noise(obs, dr_.observation_noise, rng, false);
  return obs;
}

Observation CubeCarryEnv::reset_with(const GoalTrajectory& trajectory,
                                     const Vec3& cube_pos) {
  effective_ = base_;
  place_effectors_home();
  state_.trajectory = trajectory;
  state_.cube_pos = cube_pos;
  return finish_reset();
}

StepResult CubeCarryEnv::step(std::span<const double> action, SeededRng& rng) {
  if (done()) throw StateError("step: episode already finished, reset first");
  if (action.size() != kActionDim) {
    throw InputError("step: action must have " + std::to_string(kActionDim) +
                     " components");
  }
  std::array<double, kActionDim> a{};
  for (int i = 0; i < kActionDim; ++i) {
    if (!std::isfinite(action[i])) throw InputError("step: non-finite action");
    a[i] = std::clamp(action[i], -1.0, 1.0);
  }
  state_.prev_action = a;  // the commanded action, before actuation noise

  std::array<double, kActionDim> applied = a;
  if (dr_.enabled) apply_noise(applied, dr_.action_noise, rng, true);

  const EnvParams& p = effective_;
  const double half = p.cube_half_extent;
  state_.prev_cube_pos = state_.cube_pos;

  for (int e = 0; e < kNumEffectors; ++e) {
    Vec3& pos = state_.effector_pos[e];
    const Vec3 old = pos;
    for (int k = 0; k < 3; ++k) pos[k] += applied[3 * e + k] * p.v_max * p.dt;
    pos[2] = std::clamp(pos[2], 0.0, p.max_height);
    clamp_radial(pos[0], pos[1], base_.arena_radius);
    for (int k = 0; k < 3; ++k) state_.effector_vel[e][k] = (pos[k] - old[k]) / p.dt;
  }

  // Grasp check with hysteresis: a held cube tolerates twice the contact gap.
  const double tol = (state_.held ? 2.0 : 1.0) * p.grasp_tolerance;
  std::array<bool, kNumEffectors> contact{};
  int n_contacts = 0;
  for (int e = 0; e < kNumEffectors; ++e) {
    contact[e] =
        box_surface_distance(state_.effector_pos[e], state_.cube_pos, half) <= tol;
    n_contacts += contact[e] ? 1 : 0;
  }
  bool held = false;
  if (n_contacts >= 2) {
    for (int i = 0; i < kNumEffectors && !held; ++i) {
      if (!contact[i]) continue;
      for (int j = i + 1; j < kNumEffectors && !held; ++j) {
        if (!contact[j]) continue;
        const double uxi = state_.effector_pos[i][0] - state_.cube_pos[0];
        const double uyi = state_.effector_pos[i][1] - state_.cube_pos[1];
        const double uxj = state_.effector_pos[j][0] - state_.cube_pos[0];
        const double uyj = state_.effector_pos[j][1] - state_.cube_pos[1];
        const double ni = std::hypot(uxi, uyi);
        const double nj = std::hypot(uxj, uyj);
        if (ni < 1e-12 || nj < 1e-12) continue;
        const double cosang = (uxi * uxj + uyi * uyj) / (ni * nj);
        if (cosang < kCos120) held = true;
      }
    }
  }
  state_.held = held;

  if (held) {
    // Carry: cube tracks the centroid of the contacting effectors, rate-capped.
    Vec3 centroid{0.0, 0.0, 0.0};
    int n = 0;
    for (int e = 0; e < kNumEffectors; ++e) {
      if (!contact[e]) continue;
      for (int k = 0; k < 3; ++k) centroid[k] += state_.effector_pos[e][k];
      ++n;
    }
    for (int k = 0; k < 3; ++k) centroid[k] /= n;
    Vec3 delta = {centroid[0] - state_.cube_pos[0],
                  centroid[1] - state_.cube_pos[1],
                  centroid[2] - half - state_.cube_pos[2]};
    const double cap = p.lift_speed_cap * p.dt;
    const double len =
        std::sqrt(delta[0] * delta[0] + delta[1] * delta[1] + delta[2] * delta[2]);
    if (len > cap) {
      const double s = cap / len;
      for (double& d : delta) d *= s;
    }
    for (int k = 0; k < 3; ++k) state_.cube_pos[k] += delta[k];
  } else {
    state_.cube_pos[2] =
        std::max(half, state_.cube_pos[2] - p.gravity_drop * p.dt);
    for (int e = 0; e < kNumEffectors; ++e) {
      const Vec3& ep = state_.effector_pos[e];
      const double dx = ep[0] - state_.cube_pos[0];
      const double dy = ep[1] - state_.cube_pos[1];
      const bool in_footprint = std::abs(dx) <= half && std::abs(dy) <= half;
      if (!in_footprint || ep[2] >= state_.cube_pos[2] + half) continue;
      const double ox = half - std::abs(dx);
      const double oy = half - std::abs(dy);
      // Resolve along the axis of least penetration, cube moves away.
      if (ox <= oy) {
        state_.cube_pos[0] -= sign_or_positive(dx) * p.push_gain * ox;
      } else {
        state_.cube_pos[1] -= sign_or_positive(dy) * p.push_gain * oy;
      }
    }
  }
  clamp_radial(state_.cube_pos[0], state_.cube_pos[1], base_.arena_radius - half);
  state_.cube_pos[2] = std::clamp(state_.cube_pos[2], half, p.max_height);

  // Goal active during this transition (before the index advances).
  const Vec3 goal = state_.trajectory.active(state_.step_index);
  state_.step_index += 1;

  StepResult result;
  result.achieved_goal = state_.cube_pos;
  result.info.held = state_.held;
  result.info.xy_distance = norm_xy(state_.cube_pos, goal);
  result.info.success = is_success(state_.cube_pos, goal);
  result.observation = make_observation();
  if (dr_.enabled) apply_noise(result.observation, dr_.observation_noise, rng, false);
  return result;
}

Observation CubeCarryEnv::make_observation() const {
  Observation obs;
  obs.reserve(kObservationDim);
  for (const auto& p : state_.effector_pos) obs.insert(obs.end(), p.begin(), p.end());
  for (const auto& v : state_.effector_vel) obs.insert(obs.end(), v.begin(), v.end());
  obs.insert(obs.end(), state_.prev_action.begin(), state_.prev_action.end());
  obs.insert(obs.end(), state_.cube_pos.begin(), state_.cube_pos.end());
  for (int k = 0; k < 3; ++k) obs.push_back(state_.cube_pos[k] - state_.prev_cube_pos[k]);
  const Vec3& goal = active_goal();
  obs.insert(obs.end(), goal.begin(), goal.end());
  return obs;
}

}  // namespace trajher
