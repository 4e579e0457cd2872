#pragma once

#include <array>
#include <span>
#include <vector>

#include "trajher/numerics.hpp"

namespace trajher {

using Vec3 = std::array<double, 3>;

inline constexpr int kEpisodeSteps = 90;
inline constexpr int kSegmentSteps = 30;
inline constexpr int kNumSegments = kEpisodeSteps / kSegmentSteps;
inline constexpr int kActionDim = 9;
inline constexpr int kGoalDim = 3;
inline constexpr int kNumEffectors = 3;
// effector positions (9) + effector velocities (9) + previous commanded
// action (9) + cube position (3) + cube position delta (3) + active goal (3)
inline constexpr int kObservationDim = 36;

double norm_xy(const Vec3& a, const Vec3& b);
double norm_3d(const Vec3& a, const Vec3& b);

/// Geometry and contact-model constants of the simplified cube-carry world.
/// Distances in metres, speeds in m/s, dt in seconds (20 Hz control).
struct EnvParams {
  double arena_radius = 0.19;
  double cube_half_extent = 0.0325;
  double dt = 0.05;
  double v_max = 0.3;              // effector speed limit
  double grasp_tolerance = 0.015;  // distance-to-surface for a grasp contact
  double push_gain = 1.0;
  double gravity_drop = 1.0;       // fall speed while not held
  double lift_speed_cap = 0.2;     // carried-cube speed limit
  double max_height = 0.27;
  double home_radius = 0.12;       // effector home poses, 120 degrees apart
  double home_z = 0.08;
  double goal_z_max = 0.15;
  double floor_goal_prob = 0.25;   // fraction of goals forced to floor height

  void validate() const;
};

struct Range {
  double lo = 1.0;
  double hi = 1.0;
};

/// Per-episode physics randomization plus per-step action/observation noise.
struct DRConfig {
  bool enabled = false;
  Range push_gain{0.8, 1.2};
  Range grasp_tolerance{0.8, 1.2};
  Range cube_half_extent{0.9, 1.1};
  Range lift_speed_cap{0.8, 1.2};
  double action_noise = 0.05;
  double observation_noise = 0.005;

  void validate() const;
};

/// Three waypoints; goal i is active during steps [30*i, 30*i+29].
struct GoalTrajectory {
  std::array<Vec3, kNumSegments> goals{};

  const Vec3& active(int step) const {
    int seg = step / kSegmentSteps;
    if (seg >= kNumSegments) seg = kNumSegments - 1;
    return goals[static_cast<std::size_t>(seg)];
  }
  const Vec3& final_goal() const { return goals.back(); }
};

struct EnvState {
  std::array<Vec3, kNumEffectors> effector_pos{};
  std::array<Vec3, kNumEffectors> effector_vel{};
  Vec3 cube_pos{};
  Vec3 prev_cube_pos{};
  std::array<double, kActionDim> prev_action{};
  bool held = false;
  int step_index = 0;
  GoalTrajectory trajectory;
};

enum class RewardMode { kFull, kPushOnly, kSparse3d };

/// Two-component reward. kFull combines the sparse x-y term (0 within 2 cm,
/// else -1) with the dense asymmetric z term (-a*|dz| below the goal,
/// -(a/2)*|dz| above). kPushOnly keeps the sparse x-y term alone. kSparse3d
/// is the classic sparse reward on the full 3-D distance.
double compute_reward(const Vec3& achieved, const Vec3& goal, RewardMode mode,
                      double a);

/// 3-D distance within 2 cm.
bool is_success(const Vec3& achieved, const Vec3& goal);

/// Adds iid Gaussian noise; no-op (and no rng draws) when sigma == 0.
/// With clip_to_unit the result is re-clipped to [-1, 1].
void apply_noise(std::span<double> values, double sigma, SeededRng& rng,
                 bool clip_to_unit);

using Observation = std::vector<double>;  // length kObservationDim

struct StepInfo {
  bool held = false;
  double xy_distance = 0.0;  // to the goal active during this transition
  bool success = false;      // 3-D success against that goal
};

struct StepResult {
  Observation observation;
  Vec3 achieved_goal{};
  StepInfo info;
};

/// Quasi-static cube-carry environment: three point effectors under velocity
/// control, one cube, fixed 90-step episodes with the goal advancing every
/// 30 steps. Contact rules run in a fixed order each step: grasp check, then
/// carry while held, otherwise gravity drop plus horizontal pushing.
class CubeCarryEnv {
 public:
  CubeCarryEnv(EnvParams params, DRConfig dr);

  /// Random episode: effectors at home, cube uniform on the arena floor,
  /// fresh random trajectory; DR parameters resampled when enabled.
  Observation reset(SeededRng& rng);

  /// Deterministic episode setup for scripted runs: no rng draws, DR
  /// multipliers stay at 1.
  Observation reset_with(const GoalTrajectory& trajectory, const Vec3& cube_pos);

  StepResult step(std::span<const double> action, SeededRng& rng);

  bool done() const { return state_.step_index >= kEpisodeSteps; }
  const EnvState& state() const { return state_; }
  void set_state(const EnvState& s) { state_ = s; }
  const EnvParams& base_params() const { return base_; }
  /// Parameters in effect for the current episode (after DR resampling).
  const EnvParams& episode_params() const { return effective_; }
  const DRConfig& dr_config() const { return dr_; }
  const Vec3& active_goal() const { return state_.trajectory.active(state_.step_index); }

  Observation make_observation() const;

 private:
  void place_effectors_home();
  Observation finish_reset();

  EnvParams base_;
  EnvParams effective_;
  DRConfig dr_;
  EnvState state_;
};

}  // namespace trajher
