#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <sstream>

#include "darp/neural.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace darp;

namespace {

// The hand-computed 2-2-heads fixture: every activation worked out on
// paper, frozen here. One first-layer unit sits at 0.01 (alive), one
// second-layer unit at -0.045 (dead), so both ReLU branches are covered.
DuelingNet hand_fixture() {
  DuelingNet net(2, 2, 4);
  NetParams& p = net.params();
  p.trunk1.w = {0.1, -0.2, 0.3, 0.4};
  p.trunk1.b = {0.06, -0.05};
  p.trunk2.w = {0.5, -0.5, 0.25, 0.75};
  p.trunk2.b = {0.1, -0.2};
  p.value.w = {0.2, -0.4};
  p.value.b = {0.15};
  p.advantage.w = {1.0, 0.5, -0.5, 0.25, 0.0, -1.0, 0.75, 0.75};
  p.advantage.b = {0.01, 0.02, 0.03, 0.04};
  return net;
}

}  // namespace

TEST_CASE("zero network outputs zero Q-values") {
  DuelingNet net(2, 50, 4);
  const auto q = net.forward(std::vector<double>{0.3, 0.7});
  REQUIRE(q.size() == 4);
  for (double v : q) {
    CHECK(v == 0.0);
  }
}

TEST_CASE("advantages are mean-centered around the state value") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> in_pick(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    DuelingNet net(2, 10, 4);
    testutil::randomize_params(net, rng);
    DuelingNet::ForwardCache cache;
    net.forward_cached(std::vector<double>{in_pick(rng), in_pick(rng)}, cache);
    double mean_excess = 0.0;
    for (double q : cache.q) {
      mean_excess += q - cache.v;
    }
    CHECK(std::abs(mean_excess / 4.0) < 1e-9);
  }
}

TEST_CASE("hand-computed forward fixture") {
  const DuelingNet net = hand_fixture();
  DuelingNet::ForwardCache cache;
  net.forward_cached(std::vector<double>{0.5, 0.5}, cache);
  CHECK(cache.h1[0] == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(cache.h1[1] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(cache.h2[0] == 0.0);  // pre-activation -0.045
  CHECK(cache.h2[1] == doctest::Approx(0.0275).epsilon(1e-12));
  CHECK(cache.v == doctest::Approx(0.139).epsilon(1e-12));
  CHECK(cache.q[0] == doctest::Approx(0.1343125).epsilon(1e-12));
  CHECK(cache.q[1] == doctest::Approx(0.1374375).epsilon(1e-12));
  CHECK(cache.q[2] == doctest::Approx(0.1130625).epsilon(1e-12));
  CHECK(cache.q[3] == doctest::Approx(0.1711875).epsilon(1e-12));
}

TEST_CASE("forward is pure") {
  const DuelingNet net = hand_fixture();
  const std::vector<double> x{0.25, -0.75};
  CHECK(net.forward(x) == net.forward(x));
}

TEST_CASE("loss basics") {
  const DuelingNet net = hand_fixture();
  const std::vector<double> x{0.5, 0.5};

  // targets equal to the current Q leave zero loss
  std::vector<QSample> batch{{x, 0}, {x, 3}};
  const auto q = net.forward(x);
  CHECK(mse_loss(net, batch, std::vector<double>{q[0], q[3]}) == 0.0);

  // a single residual of 2 squares to 4
  DuelingNet zero(2, 4, 4);
  std::vector<QSample> single{{x, 1}};
  CHECK(mse_loss(zero, single, std::vector<double>{2.0}) ==
        doctest::Approx(4.0));

  // weighted mean: residuals {1 (w=2), 9 (w=0)} -> 2*1 / 2 = 1
  std::vector<QSample> two{{x, 0}, {x, 1}};
  CHECK(mse_loss(zero, two, std::vector<double>{1.0, 9.0},
                 std::vector<double>{2.0, 0.0}) == doctest::Approx(1.0));

  CHECK_THROWS_AS(mse_loss(zero, {}, {}), std::invalid_argument);
  CHECK_THROWS_AS(
      mse_loss(zero, single, std::vector<double>{1.0, 2.0}),
      std::invalid_argument);
  CHECK_THROWS_AS(mse_loss(zero, single, std::vector<double>{1.0},
                           std::vector<double>{0.0}),
                  std::invalid_argument);
}

TEST_CASE("zero residuals give zero gradients") {
  const DuelingNet net = hand_fixture();
  const std::vector<double> x{0.5, 0.5};
  const auto q = net.forward(x);
  std::vector<QSample> batch{{x, 2}};
  const NetParams grads = backward(net, batch, std::vector<double>{q[2]});
  for (const auto* a : grads.arrays()) {
    for (double v : *a) {
      CHECK(v == 0.0);
    }
  }
}

TEST_CASE("backprop matches central finite differences") {
  std::mt19937_64 rng(2718);
  for (int trial = 0; trial < 20; ++trial) {
    auto f = testutil::random_grad_fixture(rng);
    double loss = 0.0;
    const NetParams analytic =
        backward(f.net, f.batch, f.targets, f.weights, &loss);
    const NetParams numeric =
        testutil::numeric_gradient(f.net, f.batch, f.targets, f.weights);
    CHECK(testutil::max_relative_error(analytic, numeric) < 1e-4);
    CHECK(loss == doctest::Approx(mse_loss(f.net, f.batch, f.targets,
                                           f.weights)));
  }
}

TEST_CASE("value-head bias gradient is the weighted mean of 2(Q - y)") {
  std::mt19937_64 rng(31);
  auto f = testutil::random_grad_fixture(rng);
  const NetParams grads = backward(f.net, f.batch, f.targets, f.weights);

  double expected = 0.0, total = 0.0;
  for (std::size_t k = 0; k < f.batch.size(); ++k) {
    const auto q = f.net.forward(f.batch[k].input);
    expected += f.weights[k] * 2.0 * (q[f.batch[k].action] - f.targets[k]);
    total += f.weights[k];
  }
  expected /= total;
  CHECK(grads.value.b[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("residuals out match y - Q") {
  const DuelingNet net = hand_fixture();
  const std::vector<double> x{0.5, 0.5};
  std::vector<QSample> batch{{x, 0}, {x, 3}};
  std::vector<double> residuals;
  backward(net, batch, std::vector<double>{1.0, 0.0}, {}, nullptr,
           &residuals);
  const auto q = net.forward(x);
  REQUIRE(residuals.size() == 2);
  CHECK(residuals[0] == doctest::Approx(1.0 - q[0]));
  CHECK(residuals[1] == doctest::Approx(0.0 - q[3]));
}

TEST_CASE("shifting every advantage output leaves Q unchanged") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> in_pick(-1.0, 1.0);
  std::uniform_real_distribution<double> k_pick(-100.0, 100.0);
  for (int trial = 0; trial < 50; ++trial) {
    DuelingNet net(2, 12, 4);
    testutil::randomize_params(net, rng);
    const std::vector<double> x{in_pick(rng), in_pick(rng)};
    const auto before = net.forward(x);
    const double k = k_pick(rng);
    for (double& b : net.params().advantage.b) {
      b += k;
    }
    const auto after = net.forward(x);
    for (int a = 0; a < 4; ++a) {
      CHECK(std::abs(after[a] - before[a]) < 1e-9);
    }
  }
}

TEST_CASE("rmsprop single-step oracle") {
  DuelingNet net(1, 1, 1);
  net.params().fill(0.0);
  net.params().value.b[0] = 1.0;
  NetParams grads = net.params();
  grads.fill(0.0);
  grads.value.b[0] = 1.0;

  RmsProp opt({1e-4, 0.9, 1e-8, false});
  opt.update(net.params(), grads);
  // g = 0.1, step = 1e-4 / (sqrt(0.1) + 1e-8)
  const double expected_step = 1e-4 / (std::sqrt(0.1) + 1e-8);
  CHECK(net.params().value.b[0] ==
        doctest::Approx(1.0 - expected_step).epsilon(1e-12));
  CHECK(expected_step == doctest::Approx(3.1623e-4).epsilon(1e-4));

  // raw accumulator variant divides by g itself
  DuelingNet raw(1, 1, 1);
  raw.params().value.b[0] = 1.0;
  RmsProp raw_opt({1e-4, 0.9, 1e-8, true});
  raw_opt.update(raw.params(), grads);
  CHECK(raw.params().value.b[0] ==
        doctest::Approx(1.0 - 1e-4 / (0.1 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("accumulator follows the closed-form geometric recursion") {
  DuelingNet net(1, 1, 1);
  NetParams grads = net.params();
  grads.fill(0.0);
  grads.value.b[0] = 3.0;

  const double alpha = 0.99;
  RmsProp opt({1e-4, alpha, 1e-8, false});
  for (int k = 1; k <= 20; ++k) {
    opt.update(net.params(), grads);
    const double expected = (1.0 - std::pow(alpha, k)) * 9.0;
    CHECK(opt.accumulator().value.b[0] ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("zero gradient leaves parameters in place and decays g") {
  DuelingNet net(1, 1, 1);
  net.params().value.b[0] = 2.0;
  NetParams grads = net.params();
  grads.fill(0.0);
  grads.value.b[0] = 1.0;
  RmsProp opt({1e-3, 0.9, 1e-8, false});
  opt.update(net.params(), grads);
  const double g_before = opt.accumulator().value.b[0];
  const double p_before = net.params().value.b[0];

  grads.value.b[0] = 0.0;
  opt.update(net.params(), grads);
  CHECK(net.params().value.b[0] == p_before);
  CHECK(opt.accumulator().value.b[0] == doctest::Approx(0.9 * g_before));
}

TEST_CASE("parameters stay finite under sustained updates") {
  std::mt19937_64 rng(8);
  DuelingNet net(2, 6, 4);
  testutil::randomize_params(net, rng);
  NetParams grads = net.params();
  RmsProp opt({1e-3, 0.99, 1e-8, false});
  std::uniform_real_distribution<double> g_pick(-1.0, 1.0);
  for (int step = 0; step < 20000; ++step) {
    for (auto* a : grads.arrays()) {
      for (double& v : *a) {
        v = g_pick(rng);
      }
    }
    opt.update(net.params(), grads);
  }
  for (const auto* a : net.params().arrays()) {
    for (double v : *a) {
      REQUIRE(std::isfinite(v));
    }
  }
}

TEST_CASE("clone is independent of the source") {
  std::mt19937_64 rng(21);
  DuelingNet net(2, 8, 4);
  testutil::randomize_params(net, rng);
  const DuelingNet clone = net;
  const std::vector<double> x{0.2, -0.4};
  const auto before = clone.forward(x);
  net.params().fill(12.0);
  CHECK(clone.forward(x) == before);
}

TEST_CASE("glorot init is seed-deterministic") {
  const auto a = DuelingNet::glorot_init(2, 50, 4, 9);
  const auto b = DuelingNet::glorot_init(2, 50, 4, 9);
  const auto c = DuelingNet::glorot_init(2, 50, 4, 10);
  CHECK(a.params().trunk1.w == b.params().trunk1.w);
  CHECK(a.params().trunk1.w != c.params().trunk1.w);
  for (double v : a.params().trunk1.b) {
    CHECK(v == 0.0);
  }
  const double bound = std::sqrt(6.0 / (2 + 50));
  for (double v : a.params().trunk1.w) {
    CHECK(std::abs(v) <= bound);
  }
}

TEST_CASE("checkpoint round trip is lossless") {
  std::mt19937_64 rng(77);
  DuelingNet net(2, 9, 4);
  testutil::randomize_params(net, rng);

  RmsProp opt({2e-4, 0.95, 1e-7, true});
  NetParams grads = net.params();
  opt.update(net.params(), grads);  // give the accumulator real content

  std::stringstream buf;
  save_checkpoint(buf, net, &opt);

  DuelingNet loaded(1, 1, 1);
  RmsProp loaded_opt;
  CHECK(load_checkpoint(buf, loaded, &loaded_opt));
  for (std::size_t a = 0; a < 8; ++a) {
    CHECK(*loaded.params().arrays()[a] == *net.params().arrays()[a]);
    CHECK(*loaded_opt.accumulator().arrays()[a] ==
          *opt.accumulator().arrays()[a]);
  }
  CHECK(loaded_opt.options().learning_rate == 2e-4);
  CHECK(loaded_opt.options().decay == 0.95);
  CHECK(loaded_opt.options().raw_denominator);

  // without optimizer state
  std::stringstream bare;
  save_checkpoint(bare, net);
  DuelingNet bare_net(1, 1, 1);
  CHECK(!load_checkpoint(bare, bare_net));
  CHECK(bare_net.forward(std::vector<double>{0.1, 0.2}) ==
        net.forward(std::vector<double>{0.1, 0.2}));
}

TEST_CASE("corrupt checkpoints raise parse errors, not garbage weights") {
  DuelingNet net(2, 5, 4);
  std::stringstream buf;
  save_checkpoint(buf, net);
  const std::string bytes = buf.str();

  std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
  DuelingNet sink(1, 1, 1);
  CHECK_THROWS_AS(load_checkpoint(truncated, sink), CheckpointError);

  std::string mangled = bytes;
  mangled[0] = 'X';
  std::stringstream bad_magic(mangled);
  CHECK_THROWS_AS(load_checkpoint(bad_magic, sink), CheckpointError);

  std::stringstream empty;
  CHECK_THROWS_AS(load_checkpoint(empty, sink), CheckpointError);
}
