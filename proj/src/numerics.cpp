#include "trajher/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "trajher/errors.hpp"

namespace trajher {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed) {
  std::uint64_t s = seed;
  for (auto& word : state_) word = splitmix64(s);
}

std::uint64_t SeededRng::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double SeededRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) {
  if (lo == hi) return lo;
  return lo + (hi - lo) * uniform();
}

double SeededRng::normal() {
  // u1 in (0, 1] so log stays finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

SeededRng SeededRng::fork() { return SeededRng(next_u64()); }

Mlp Mlp::init(std::vector<int> layer_sizes, OutputActivation act,
              SeededRng& rng) {
  Mlp net = Mlp::zeros(std::move(layer_sizes), act);
  for (int l = 0; l < net.num_layers(); ++l) {
    const int fan_in = net.layer_sizes[l];
    const int fan_out = net.layer_sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    double* w = net.params.data() + net.weight_offset(l);
    for (int i = 0; i < fan_out * fan_in; ++i) w[i] = rng.uniform(-bound, bound);
    // Biases stay zero.
  }
  return net;
}

Mlp Mlp::zeros(std::vector<int> layer_sizes, OutputActivation act) {
  Mlp net;
  net.layer_sizes = std::move(layer_sizes);
  net.output_activation = act;
  net.validate();
  net.params.assign(net.param_count(), 0.0);
  return net;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    n += static_cast<std::size_t>(layer_sizes[l] + 1) * layer_sizes[l + 1];
  }
  return n;
}

std::size_t Mlp::weight_offset(int layer) const {
  std::size_t off = 0;
  for (int l = 0; l < layer; ++l) {
    off += static_cast<std::size_t>(layer_sizes[l] + 1) * layer_sizes[l + 1];
  }
  return off;
}

std::size_t Mlp::bias_offset(int layer) const {
  return weight_offset(layer) +
         static_cast<std::size_t>(layer_sizes[layer]) * layer_sizes[layer + 1];
}

void Mlp::validate() const {
  if (layer_sizes.size() < 2) {
    throw ConfigError("Mlp needs at least an input and an output layer");
  }
  for (int s : layer_sizes) {
    if (s <= 0) throw ConfigError("Mlp layer sizes must be positive");
  }
  if (!params.empty() && params.size() != param_count()) {
    throw ConfigError("Mlp parameter vector has wrong length");
  }
}

namespace {

using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;

void check_finite_rows(const RowMatrix& m, int layer, const char* what) {
  if (!m.allFinite()) {
    throw NumericalError("non-finite " + std::string(what) + " at layer " +
                         std::to_string(layer));
  }
}

}  // namespace

RowMatrix forward_batch(const Mlp& net, const RowMatrix& inputs,
                        ForwardCache* cache) {
  if (inputs.cols() != net.input_size()) {
    throw ConfigError("forward: input has " + std::to_string(inputs.cols()) +
                      " columns, network expects " +
                      std::to_string(net.input_size()));
  }
  if (cache) {
    cache->activations.clear();
    cache->activations.reserve(net.num_layers() + 1);
    cache->activations.push_back(inputs);
  }
  RowMatrix a = inputs;
  for (int l = 0; l < net.num_layers(); ++l) {
    const int n_in = net.layer_sizes[l];
    const int n_out = net.layer_sizes[l + 1];
    ConstMap w(net.params.data() + net.weight_offset(l), n_out, n_in);
    ConstVecMap b(net.params.data() + net.bias_offset(l), n_out);
    RowMatrix z = (a * w.transpose()).rowwise() + b;
    const bool last = l + 1 == net.num_layers();
    if (!last || net.output_activation == OutputActivation::kTanh) {
      z = z.array().tanh();
    }
    a = std::move(z);
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

std::vector<double> forward(const Mlp& net, std::span<const double> input) {
  ConstMap row(input.data(), 1, static_cast<Eigen::Index>(input.size()));
  RowMatrix out = forward_batch(net, row);
  return std::vector<double>(out.data(), out.data() + out.size());
}

BatchBackwardResult backward_batch(const Mlp& net, const ForwardCache& cache,
                                   const RowMatrix& upstream_grad) {
  const int layers = net.num_layers();
  if (static_cast<int>(cache.activations.size()) != layers + 1) {
    throw ConfigError("backward: cache does not match network depth");
  }
  if (upstream_grad.rows() != cache.activations.back().rows() ||
      upstream_grad.cols() != net.output_size()) {
    throw ConfigError("backward: upstream gradient has wrong shape");
  }

  BatchBackwardResult result;
  result.param_grads.assign(net.param_count(), 0.0);

  // dZ for the output layer.
  RowMatrix dz;
  if (net.output_activation == OutputActivation::kTanh) {
    const RowMatrix& y = cache.activations.back();
    dz = upstream_grad.array() * (1.0 - y.array().square());
  } else {
    dz = upstream_grad;
  }

  for (int l = layers - 1; l >= 0; --l) {
    const int n_in = net.layer_sizes[l];
    const int n_out = net.layer_sizes[l + 1];
    const RowMatrix& a_prev = cache.activations[l];
    check_finite_rows(a_prev, l, "activation");
    check_finite_rows(dz, l + 1, "gradient");

    MutMap dw(result.param_grads.data() + net.weight_offset(l), n_out, n_in);
    Eigen::Map<Eigen::RowVectorXd> db(
        result.param_grads.data() + net.bias_offset(l), n_out);
    dw.noalias() = dz.transpose() * a_prev;
    db = dz.colwise().sum();

    ConstMap w(net.params.data() + net.weight_offset(l), n_out, n_in);
    RowMatrix da_prev = dz * w;
    if (l > 0) {
      // Hidden activations are tanh.
      dz = da_prev.array() * (1.0 - a_prev.array().square());
    } else {
      result.input_grads = std::move(da_prev);
    }
  }
  return result;
}

BackwardResult backward(const Mlp& net, std::span<const double> input,
                        std::span<const double> upstream_grad) {
  ForwardCache cache;
  ConstMap row(input.data(), 1, static_cast<Eigen::Index>(input.size()));
  forward_batch(net, row, &cache);
  ConstMap up(upstream_grad.data(), 1,
              static_cast<Eigen::Index>(upstream_grad.size()));
  BatchBackwardResult r = backward_batch(net, cache, up);
  BackwardResult out;
  out.param_grads = std::move(r.param_grads);
  out.input_grads.assign(r.input_grads.data(),
                         r.input_grads.data() + r.input_grads.size());
  return out;
}

AdamState AdamState::init(std::size_t param_count, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  s.m.assign(param_count, 0.0);
  s.v.assign(param_count, 0.0);
  return s;
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ConfigError("adam_step: parameter/gradient/moment length mismatch");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw NumericalError("adam_step: non-finite gradient");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

void polyak_update(std::span<double> target_params,
                   std::span<const double> main_params, double tau) {
  if (target_params.size() != main_params.size()) {
    throw ConfigError("polyak_update: length mismatch");
  }
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw ConfigError("polyak_update: tau must lie in [0, 1]");
  }
  for (std::size_t i = 0; i < target_params.size(); ++i) {
    target_params[i] = tau * target_params[i] + (1.0 - tau) * main_params[i];
  }
}

RunningNormalizer::RunningNormalizer(int dim, double clip, double eps_std)
    : sum(dim, 0.0), sum_sq(dim, 0.0), clip(clip), eps_std(eps_std) {}

double RunningNormalizer::mean(int i) const {
  return count > 0.0 ? sum[i] / count : 0.0;
}

double RunningNormalizer::stddev(int i) const {
  if (count <= 0.0) return 1.0;
  const double mu = sum[i] / count;
  const double var = sum_sq[i] / count - mu * mu;
  return std::max(std::sqrt(std::max(var, 0.0)), eps_std);
}

void RunningNormalizer::update(std::span<const double> value) {
  if (static_cast<int>(value.size()) != dim()) {
    throw ConfigError("RunningNormalizer::update: dimension mismatch");
  }
  for (int i = 0; i < dim(); ++i) {
    sum[i] += value[i];
    sum_sq[i] += value[i] * value[i];
  }
  count += 1.0;
}

void RunningNormalizer::update_rows(const RowMatrix& batch) {
  if (batch.cols() != dim()) {
    throw ConfigError("RunningNormalizer::update_rows: dimension mismatch");
  }
  for (Eigen::Index r = 0; r < batch.rows(); ++r) {
    for (int i = 0; i < dim(); ++i) {
      sum[i] += batch(r, i);
      sum_sq[i] += batch(r, i) * batch(r, i);
    }
  }
  count += static_cast<double>(batch.rows());
}

std::vector<double> RunningNormalizer::normalize(
    std::span<const double> value) const {
  if (static_cast<int>(value.size()) != dim()) {
    throw ConfigError("RunningNormalizer::normalize: dimension mismatch");
  }
  std::vector<double> out(value.size());
  for (int i = 0; i < dim(); ++i) {
    const double z = (value[i] - mean(i)) / stddev(i);
    out[i] = std::clamp(z, -clip, clip);
  }
  return out;
}

void RunningNormalizer::normalize_rows_inplace(RowMatrix& rows) const {
  if (rows.cols() != dim()) {
    throw ConfigError("RunningNormalizer::normalize_rows: dimension mismatch");
  }
  for (int i = 0; i < dim(); ++i) {
    const double mu = mean(i);
    const double sd = stddev(i);
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      rows(r, i) = std::clamp((rows(r, i) - mu) / sd, -clip, clip);
    }
  }
}

}  // namespace trajher
