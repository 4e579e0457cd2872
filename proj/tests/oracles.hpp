#pragma once

// Test-only reference implementations, written independently of the library
// code paths they check.

#include <cmath>
#include <functional>
#include <vector>

#include "trajher/env.hpp"
#include "trajher/numerics.hpp"

namespace trajher::test {

/// Straightforward per-neuron forward pass over the same flat parameter
/// layout; deliberately loop-based, no shared code with forward().
inline std::vector<double> naive_forward(const Mlp& net,
                                         const std::vector<double>& input) {
  std::vector<double> act = input;
  std::size_t offset = 0;
  const int layers = static_cast<int>(net.layer_sizes.size()) - 1;
  for (int l = 0; l < layers; ++l) {
    const int n_in = net.layer_sizes[l];
    const int n_out = net.layer_sizes[l + 1];
    std::vector<double> next(n_out, 0.0);
    for (int o = 0; o < n_out; ++o) {
      double z = 0.0;
      for (int i = 0; i < n_in; ++i) {
        z += net.params[offset + static_cast<std::size_t>(o) * n_in + i] * act[i];
      }
      z += net.params[offset + static_cast<std::size_t>(n_out) * n_in + o];
      const bool last = l == layers - 1;
      if (!last || net.output_activation == OutputActivation::kTanh) {
        z = std::tanh(z);
      }
      next[o] = z;
    }
    offset += static_cast<std::size_t>(n_in + 1) * n_out;
    act = std::move(next);
  }
  return act;
}

/// Central finite differences of a scalar function of a parameter vector.
inline std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> params, double h = 1e-5) {
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = f(params);
    params[i] = saved - h;
    const double down = f(params);
    params[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

/// Largest relative error between an analytic and a reference gradient,
/// with an absolute floor for near-zero entries.
inline double max_relative_error(const std::vector<double>& analytic,
                                 const std::vector<double>& reference,
                                 double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom =
        std::max({std::abs(analytic[i]), std::abs(reference[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - reference[i]) / denom);
  }
  return worst;
}

/// Direct transcription of the two reward formulas for cross-checking the
/// library implementation.
inline double reference_reward_xy(const Vec3& achieved, const Vec3& goal) {
  const double d = std::sqrt((achieved[0] - goal[0]) * (achieved[0] - goal[0]) +
                             (achieved[1] - goal[1]) * (achieved[1] - goal[1]));
  return d <= 0.02 ? 0.0 : -1.0;
}

inline double reference_reward_z(const Vec3& achieved, const Vec3& goal,
                                 double a) {
  const double z_cube = achieved[2];
  const double z_goal = goal[2];
  if (z_cube < z_goal) return -a * std::abs(z_cube - z_goal);
  if (z_cube > z_goal) return -(a / 2.0) * std::abs(z_cube - z_goal);
  return 0.0;
}

}  // namespace trajher::test
