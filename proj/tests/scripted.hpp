#pragma once

// Hand-coded grasp-and-carry controller used as a behavioral oracle: it
// proves the task is solvable and gives trainer/eval tests a competent
// policy without any learning.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "trajher/env.hpp"

namespace trajher::test {

class ScriptedCarryPolicy {
 public:
  explicit ScriptedCarryPolicy(const EnvParams& params) : p_(params) {}

  std::vector<double> act(std::span<const double> obs,
                          std::span<const double> goal) const {
    const double h = p_.cube_half_extent;
    const double grip = h + 0.006;  // inside the grasp tolerance shell
    const double step = p_.v_max * p_.dt;

    const Vec3 eff0{obs[0], obs[1], obs[2]};
    const Vec3 eff1{obs[3], obs[4], obs[5]};
    const Vec3 cube{obs[27], obs[28], obs[29]};
    const Vec3 target_goal{goal[0], goal[1], goal[2]};

    std::vector<double> action(kActionDim, 0.0);
    const bool holding = surface_distance(eff0, cube, h) <= 0.013 &&
                         surface_distance(eff1, cube, h) <= 0.013;

    if (holding) {
      // Advance the cube toward the goal below the carry speed cap and keep
      // the grip bearing the effectors already have.
      Vec3 desired = cube;
      move_toward(desired, target_goal, 0.008);
      double dx = eff0[0] - cube[0];
      double dy = eff0[1] - cube[1];
      double n = std::hypot(dx, dy);
      if (n < 1e-9) {
        dx = 0.0;
        dy = 1.0;
        n = 1.0;
      }
      dx /= n;
      dy /= n;
      const Vec3 t0{desired[0] + grip * dx, desired[1] + grip * dy, desired[2] + h};
      const Vec3 t1{desired[0] - grip * dx, desired[1] - grip * dy, desired[2] + h};
      write_effector(action, 0, eff0, t0, step, 0.6);
      write_effector(action, 1, eff1, t1, step, 0.6);
      return action;
    }

    // Approach from opposite sides along the tangent direction, travelling
    // above the cube top so nothing is pushed on the way in.
    double tx = -cube[1];
    double ty = cube[0];
    double tn = std::hypot(tx, ty);
    if (tn < 1e-6) {
      tx = 0.0;
      ty = 1.0;
      tn = 1.0;
    }
    tx /= tn;
    ty /= tn;
    const double side0 = (eff0[0] - cube[0]) * tx + (eff0[1] - cube[1]) * ty >= 0.0
                             ? 1.0
                             : -1.0;
    for (int i = 0; i < 2; ++i) {
      const Vec3& eff = i == 0 ? eff0 : eff1;
      const double side = i == 0 ? side0 : -side0;
      const double gx = cube[0] + side * grip * tx;
      const double gy = cube[1] + side * grip * ty;
      const double xy_err = std::hypot(eff[0] - gx, eff[1] - gy);
      Vec3 target;
      if (xy_err > 0.004) {
        target = {gx, gy, cube[2] + h + 0.025};
      } else {
        target = {gx, gy, cube[2] + h};
      }
      write_effector(action, i, eff, target, step, 1.0);
    }
    return action;
  }

  std::vector<double> operator()(std::span<const double> obs,
                                 std::span<const double> goal) const {
    return act(obs, goal);
  }

 private:
  static double surface_distance(const Vec3& p, const Vec3& c, double h) {
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double d = std::max(std::abs(p[k] - c[k]) - h, 0.0);
      acc += d * d;
    }
    return std::sqrt(acc);
  }

  static void move_toward(Vec3& v, const Vec3& target, double max_step) {
    const double dx = target[0] - v[0];
    const double dy = target[1] - v[1];
    const double dz = target[2] - v[2];
    const double len = std::sqrt(dx * dx + dy * dy + dz * dz);
    const double s = len > max_step ? max_step / len : 1.0;
    v[0] += dx * s;
    v[1] += dy * s;
    v[2] += dz * s;
  }

  static void write_effector(std::vector<double>& action, int index,
                             const Vec3& pos, const Vec3& target, double step,
                             double limit) {
    for (int k = 0; k < 3; ++k) {
      action[3 * index + k] =
          std::clamp((target[k] - pos[k]) / step, -limit, limit);
    }
  }

  EnvParams p_;
};

}  // namespace trajher::test
