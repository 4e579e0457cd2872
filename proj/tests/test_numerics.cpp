#include <doctest.h>

#include <cmath>
#include <vector>

#include "trajher/errors.hpp"
#include "trajher/numerics.hpp"
#include "oracles.hpp"

using namespace trajher;

TEST_SUITE("numerics") {

TEST_CASE("rng: same seed, same sequence; forks diverge") {
  SeededRng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  SeededRng parent(7);
  SeededRng child1 = parent.fork();
  SeededRng child2 = parent.fork();
  CHECK(child1.next_u64() != child2.next_u64());
}

TEST_CASE("rng: uniform range and degenerate range draws nothing") {
  SeededRng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform(-1.0, 1.0);
    CHECK(u >= -1.0);
    CHECK(u < 1.0);
  }
  SeededRng x(5), y(5);
  CHECK(x.uniform(3.0, 3.0) == 3.0);
  CHECK(x.next_u64() == y.next_u64());  // the degenerate draw consumed nothing
}

TEST_CASE("forward: zero weights pass the bias through the activation") {
  Mlp net = Mlp::zeros({3, 4, 2}, OutputActivation::kTanh);
  net.params[net.bias_offset(1) + 0] = 0.5;
  net.params[net.bias_offset(1) + 1] = -2.0;
  const std::vector<double> out = forward(net, std::vector<double>{9.0, -3.0, 1.0});
  CHECK(out[0] == doctest::Approx(std::tanh(0.5)).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(std::tanh(-2.0)).epsilon(1e-15));
}

TEST_CASE("forward: identity single layer reproduces the input") {
  Mlp net = Mlp::zeros({3, 3}, OutputActivation::kIdentity);
  for (int i = 0; i < 3; ++i) net.params[i * 3 + i] = 1.0;
  const std::vector<double> x{0.25, -1.5, 3.0};
  CHECK(forward(net, x) == x);
}

TEST_CASE("forward: random 4-8-2 net matches an independent re-implementation") {
  SeededRng rng(42);
  Mlp net = Mlp::init({4, 8, 2}, OutputActivation::kIdentity, rng);
  std::vector<double> input(4);
  for (double& v : input) v = rng.uniform(-1.0, 1.0);
  const std::vector<double> got = forward(net, input);
  const std::vector<double> expected = test::naive_forward(net, input);
  REQUIRE(got.size() == expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  }
}

TEST_CASE("forward: dimension mismatch is a configuration error") {
  Mlp net = Mlp::zeros({3, 2}, OutputActivation::kIdentity);
  CHECK_THROWS_AS(forward(net, std::vector<double>{1.0, 2.0}), ConfigError);
}

TEST_CASE("backward: linear 1-1 analytic case") {
  // y = w*x + b with w=2, b=0.5; upstream 1, input 3: dw=3, db=1, dx=w.
  Mlp net = Mlp::zeros({1, 1}, OutputActivation::kIdentity);
  net.params[0] = 2.0;
  net.params[1] = 0.5;
  const BackwardResult r =
      backward(net, std::vector<double>{3.0}, std::vector<double>{1.0});
  CHECK(r.param_grads[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(r.param_grads[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.input_grads[0] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("backward: zero upstream gradient zeroes every gradient") {
  SeededRng rng(3);
  Mlp net = Mlp::init({4, 6, 3}, OutputActivation::kTanh, rng);
  std::vector<double> input(4, 0.7);
  const BackwardResult r = backward(net, input, std::vector<double>(3, 0.0));
  for (double g : r.param_grads) CHECK(g == 0.0);
  for (double g : r.input_grads) CHECK(g == 0.0);
}

TEST_CASE("backward: random 3-5-1 net matches central finite differences") {
  SeededRng rng(11);
  Mlp net = Mlp::init({3, 5, 1}, OutputActivation::kIdentity, rng);
  std::vector<double> input(3);
  for (double& v : input) v = rng.uniform(-1.0, 1.0);

  const BackwardResult analytic =
      backward(net, input, std::vector<double>{1.0});
  const auto loss = [&](const std::vector<double>& params) {
    Mlp probe = net;
    probe.params = params;
    return forward(probe, input)[0];
  };
  const std::vector<double> fd =
      test::finite_difference_gradient(loss, net.params);
  CHECK(test::max_relative_error(analytic.param_grads, fd) <= 1e-4);
}

TEST_CASE("backward: gradient check over a population of random small nets") {
  SeededRng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const int in = 1 + static_cast<int>(rng.uniform() * 4);
    const int hidden = 1 + static_cast<int>(rng.uniform() * 8);
    const int out = 1 + static_cast<int>(rng.uniform() * 3);
    const auto act = trial % 2 == 0 ? OutputActivation::kIdentity
                                    : OutputActivation::kTanh;
    Mlp net = Mlp::init({in, hidden, out}, act, rng);
    std::vector<double> input(in);
    for (double& v : input) v = rng.uniform(-2.0, 2.0);
    std::vector<double> upstream(out);
    for (double& v : upstream) v = rng.uniform(-1.0, 1.0);

    const BackwardResult analytic = backward(net, input, upstream);
    const auto loss = [&](const std::vector<double>& params) {
      Mlp probe = net;
      probe.params = params;
      const std::vector<double> y = forward(probe, input);
      double acc = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) acc += upstream[i] * y[i];
      return acc;
    };
    const std::vector<double> fd =
        test::finite_difference_gradient(loss, net.params);
    CHECK(test::max_relative_error(analytic.param_grads, fd) <= 1e-4);
  }
}

TEST_CASE("adam: zero gradients leave parameters untouched, step advances") {
  std::vector<double> params{1.0, -2.0, 3.0};
  const std::vector<double> before = params;
  AdamState state = AdamState::init(3, 1e-3);
  adam_step(params, std::vector<double>(3, 0.0), state);
  CHECK(params == before);
  CHECK(state.step == 1);
}

TEST_CASE("adam: first bias-corrected step moves by about lr") {
  // m_hat = v_hat = 1 after one step with g=1, so the update is
  // lr / (1 + eps) ~= lr.
  std::vector<double> params{0.0};
  AdamState state = AdamState::init(1, 1e-3);
  adam_step(params, std::vector<double>{1.0}, state);
  CHECK(params[0] == doctest::Approx(-1e-3).epsilon(1e-7));
}

TEST_CASE("adam: identical calls from identical state copies agree") {
  std::vector<double> p1{0.4, -0.2}, p2{0.4, -0.2};
  AdamState s1 = AdamState::init(2, 1e-3);
  s1.m = {0.1, 0.2};
  s1.v = {0.3, 0.4};
  s1.step = 5;
  AdamState s2 = s1;
  const std::vector<double> g{0.7, -0.9};
  adam_step(p1, g, s1);
  adam_step(p2, g, s2);
  CHECK(p1 == p2);
  CHECK(s1.m == s2.m);
  CHECK(s1.v == s2.v);
}

TEST_CASE("adam: NaN gradient raises a numerical error") {
  std::vector<double> params{1.0};
  AdamState state = AdamState::init(1, 1e-3);
  CHECK_THROWS_AS(
      adam_step(params, std::vector<double>{std::nan("")}, state),
      NumericalError);
}

TEST_CASE("polyak: endpoint and interior behavior") {
  std::vector<double> target{1.0, 1.0};
  const std::vector<double> main{0.0, 0.5};

  std::vector<double> t0 = target;
  polyak_update(t0, main, 0.0);
  CHECK(t0 == main);

  std::vector<double> t1 = target;
  polyak_update(t1, main, 1.0);
  CHECK(t1 == target);

  std::vector<double> t = {1.0};
  polyak_update(t, std::vector<double>{0.0}, 0.95);
  CHECK(t[0] == doctest::Approx(0.95).epsilon(1e-15));

  CHECK_THROWS_AS(polyak_update(t, std::vector<double>{0.0}, 1.5), ConfigError);
  CHECK_THROWS_AS(polyak_update(t, std::vector<double>{0.0}, -0.1), ConfigError);
}

TEST_CASE("polyak: result stays between the two inputs") {
  SeededRng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> target(8), main(8);
    for (double& v : target) v = rng.uniform(-10.0, 10.0);
    for (double& v : main) v = rng.uniform(-10.0, 10.0);
    const std::vector<double> t0 = target;
    const double tau = rng.uniform();
    polyak_update(target, main, tau);
    for (std::size_t i = 0; i < target.size(); ++i) {
      CHECK(target[i] >= std::min(t0[i], main[i]) - 1e-12);
      CHECK(target[i] <= std::max(t0[i], main[i]) + 1e-12);
    }
  }
}

TEST_CASE("normalizer: empty state means mean 0 and std 1") {
  RunningNormalizer norm(2);
  const std::vector<double> out = norm.normalize(std::vector<double>{0.5, -30.0});
  CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(out[1] == -5.0);  // clipped
}

TEST_CASE("normalizer: constant input normalizes to zero") {
  RunningNormalizer norm(1);
  for (int i = 0; i < 10; ++i) norm.update(std::vector<double>{3.25});
  CHECK(norm.normalize(std::vector<double>{3.25})[0] == doctest::Approx(0.0));
}

TEST_CASE("normalizer: population statistics over {1,3}") {
  RunningNormalizer norm(1);
  norm.update(std::vector<double>{1.0});
  norm.update(std::vector<double>{3.0});
  // mean 2, population std 1
  CHECK(norm.normalize(std::vector<double>{3.0})[0] ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("normalizer: invariant to duplicating the update batch") {
  SeededRng rng(17);
  RunningNormalizer once(3), twice(3);
  std::vector<std::vector<double>> batch;
  for (int i = 0; i < 25; ++i) {
    std::vector<double> row(3);
    for (double& v : row) v = rng.uniform(-4.0, 4.0);
    batch.push_back(row);
  }
  for (const auto& row : batch) once.update(row);
  for (int rep = 0; rep < 2; ++rep) {
    for (const auto& row : batch) twice.update(row);
  }
  std::vector<double> probe{0.3, -1.2, 2.4};
  const auto a = once.normalize(probe);
  const auto b = twice.normalize(probe);
  for (int i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("normalizer: outputs always within the clip range") {
  SeededRng rng(23);
  RunningNormalizer norm(2, 5.0);
  for (int i = 0; i < 100; ++i) {
    norm.update(std::vector<double>{rng.normal(), 100.0 * rng.normal()});
    const auto out = norm.normalize(
        std::vector<double>{1000.0 * rng.normal(), rng.normal() * 1e-6});
    for (double v : out) {
      CHECK(v <= 5.0);
      CHECK(v >= -5.0);
    }
  }
}

TEST_CASE("mlp: parameter count identity") {
  SeededRng rng(1);
  const Mlp net = Mlp::init({7, 5, 3, 2}, OutputActivation::kTanh, rng);
  CHECK(net.param_count() == (7 + 1) * 5 + (5 + 1) * 3 + (3 + 1) * 2);
  CHECK(net.params.size() == net.param_count());
}

}  // TEST_SUITE
