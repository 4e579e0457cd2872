#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace trajher {

// Row-major matrices everywhere so flat buffers map directly onto rows.
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Deterministic, platform-independent PRNG (xoshiro256++ seeded via
/// splitmix64). Identical seed + identical call sequence gives an identical
/// output sequence; the four-word state serializes into checkpoints.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform();
  /// Uniform double in [lo, hi). Returns lo without drawing when lo == hi,
  /// so degenerate ranges do not consume stream state.
  double uniform(double lo, double hi);
  /// Standard Gaussian via Box-Muller (two uniforms per call, no cache).
  double normal();

  /// Child stream derived from the parent; advances the parent once.
  SeededRng fork();

  std::array<std::uint64_t, 4> state() const { return state_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { state_ = s; }

 private:
  SeededRng() = default;
  std::array<std::uint64_t, 4> state_{};
};

enum class OutputActivation { kIdentity, kTanh };

/// Fully connected network with tanh hidden activations, stored as one flat
/// parameter vector (per layer: row-major [out x in] weights, then biases).
struct Mlp {
  std::vector<int> layer_sizes;  // {input, hidden..., output}
  std::vector<double> params;
  OutputActivation output_activation = OutputActivation::kIdentity;

  /// Weights uniform in +/- 1/sqrt(fan_in), biases zero.
  static Mlp init(std::vector<int> layer_sizes, OutputActivation act,
                  SeededRng& rng);
  /// All parameters zero (useful for fixed-weight tests).
  static Mlp zeros(std::vector<int> layer_sizes, OutputActivation act);

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  std::size_t param_count() const;

  // Offset of layer l's weight block / bias block in `params`.
  std::size_t weight_offset(int layer) const;
  std::size_t bias_offset(int layer) const;

  void validate() const;
};

std::vector<double> forward(const Mlp& net, std::span<const double> input);

struct BackwardResult {
  std::vector<double> param_grads;
  std::vector<double> input_grads;
};

/// Gradients of sum(upstream_grad . output) w.r.t. parameters and input.
BackwardResult backward(const Mlp& net, std::span<const double> input,
                        std::span<const double> upstream_grad);

/// Post-activation layer outputs kept for the batched backward pass.
struct ForwardCache {
  std::vector<RowMatrix> activations;  // [0]=input, [num_layers]=output
};

RowMatrix forward_batch(const Mlp& net, const RowMatrix& inputs,
                        ForwardCache* cache = nullptr);

struct BatchBackwardResult {
  std::vector<double> param_grads;
  RowMatrix input_grads;
};

BatchBackwardResult backward_batch(const Mlp& net, const ForwardCache& cache,
                                   const RowMatrix& upstream_grad);

/// Adam with bias correction. Moment arrays match the parameter layout.
struct AdamState {
  std::int64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState init(std::size_t param_count, double learning_rate);
};

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state);

/// target <- tau * target + (1 - tau) * main, elementwise. tau is the
/// retention factor: tau=0 copies main, tau=1 leaves the target untouched.
void polyak_update(std::span<double> target_params,
                   std::span<const double> main_params, double tau);

/// Streaming per-dimension mean/std tracker (population std) with output
/// clipping. count == 0 behaves as mean 0 / std 1.
struct RunningNormalizer {
  std::vector<double> sum;
  std::vector<double> sum_sq;
  double count = 0.0;
  double clip = 5.0;
  double eps_std = 1e-2;

  RunningNormalizer() = default;
  explicit RunningNormalizer(int dim, double clip = 5.0, double eps_std = 1e-2);

  int dim() const { return static_cast<int>(sum.size()); }
  double mean(int i) const;
  /// max(population std, eps_std); 1 when count == 0.
  double stddev(int i) const;

  void update(std::span<const double> value);
  void update_rows(const RowMatrix& batch);

  std::vector<double> normalize(std::span<const double> value) const;
  void normalize_rows_inplace(RowMatrix& rows) const;
};

}  // namespace trajher
