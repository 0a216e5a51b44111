#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <numeric>

#include "darp/replay.hpp"
#include "doctest.h"

using namespace darp;

namespace {

Experience exp_tagged(double tag) {
  return {{0, 0}, Direction::up, tag, {0, 1}, false};
}

double leaf_sum(const SumTree& tree) {
  double sum = 0.0;
  for (int i = 0; i < tree.size(); ++i) {
    sum += tree.leaf_priority(i);
  }
  return sum;
}

}  // namespace

TEST_CASE("uniform ring overwrites the oldest entry") {
  UniformBuffer buf(5);
  for (int k = 0; k < 6; ++k) {
    buf.push(exp_tagged(k));
  }
  CHECK(buf.size() == 5);
  bool first_present = false;
  for (int i = 0; i < buf.size(); ++i) {
    first_present = first_present || buf.at(i).r == 0.0;
  }
  CHECK(!first_present);
  CHECK(buf.at(0).r == 5.0);  // cursor wrapped
}

TEST_CASE("uniform sampling of the full buffer is a permutation") {
  UniformBuffer buf(8);
  for (int k = 0; k < 8; ++k) {
    buf.push(exp_tagged(k));
  }
  Rng rng(3);
  const auto batch = buf.sample(8, rng);
  std::vector<int> indices;
  for (const auto& s : batch) {
    indices.push_back(s.index);
    CHECK(s.weight == 1.0);
  }
  std::sort(indices.begin(), indices.end());
  std::vector<int> expected(8);
  std::iota(expected.begin(), expected.end(), 0);
  CHECK(indices == expected);
}

TEST_CASE("sampling an underfilled buffer fails") {
  UniformBuffer buf(10);
  buf.push(exp_tagged(1));
  Rng rng(1);
  CHECK_THROWS_AS(buf.sample(2, rng), std::invalid_argument);

  SumTree tree(10);
  tree.push(exp_tagged(1));
  CHECK_THROWS_AS(tree.sample(2, 0.4, rng), std::invalid_argument);
}

TEST_CASE("uniform sampling is unbiased") {
  UniformBuffer buf(100);
  for (int k = 0; k < 100; ++k) {
    buf.push(exp_tagged(k));
  }
  Rng rng(2024);
  std::vector<int> counts(100, 0);
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    ++counts[buf.sample(1, rng)[0].index];
  }
  const double p = 1.0 / 100.0;
  const double sigma = std::sqrt(p * (1 - p) / trials);
  for (int i = 0; i < 100; ++i) {
    CHECK(std::abs(counts[i] / double(trials) - p) <= 3.0 * sigma);
  }
}

TEST_CASE("first push into an empty tree takes priority 1") {
  SumTree tree(16);
  tree.push(exp_tagged(7));
  CHECK(tree.size() == 1);
  CHECK(tree.leaf_priority(0) == 1.0);
  CHECK(tree.total() == 1.0);
  CHECK(tree.max_priority() == 1.0);
}

TEST_CASE("new samples inherit the current max priority") {
  SumTree tree(8);
  tree.push(exp_tagged(0));
  tree.update_from_td(std::vector<int>{0}, std::vector<double>{4.0});
  const double p0 = tree.leaf_priority(0);
  CHECK(p0 == doctest::Approx(std::pow(4.01, 0.6)));
  tree.push(exp_tagged(1));
  CHECK(tree.leaf_priority(1) == p0);
}

TEST_CASE("root tracks the leaf sum through arbitrary operations") {
  SumTree tree(64);
  Rng rng(5);
  std::uniform_real_distribution<double> p_pick(0.0, 10.0);
  std::uniform_int_distribution<int> op_pick(0, 2);
  for (int op = 0; op < 10000; ++op) {
    if (tree.size() == 0 || op_pick(rng) == 0) {
      tree.push(exp_tagged(op), p_pick(rng));
    } else {
      std::uniform_int_distribution<int> idx(0, tree.size() - 1);
      if (op_pick(rng) == 1) {
        tree.set_leaf_priority(idx(rng), p_pick(rng));
      } else {
        tree.update_from_td(std::vector<int>{idx(rng)},
                            std::vector<double>{p_pick(rng) - 5.0});
      }
    }
  }
  CHECK(tree.total() == doctest::Approx(leaf_sum(tree)).epsilon(1e-9));
}

TEST_CASE("prefix lookup agrees with a linear scan") {
  SumTree tree(37);
  Rng rng(9);
  std::uniform_real_distribution<double> p_pick(0.01, 5.0);
  for (int k = 0; k < 37; ++k) {
    tree.push(exp_tagged(k), p_pick(rng));
  }
  std::uniform_real_distribution<double> s_pick(0.0, tree.total());
  for (int trial = 0; trial < 10000; ++trial) {
    double s = s_pick(rng);
    if (s >= tree.total()) {
      continue;
    }
    const int leaf = tree.find_prefix(s);
    // linear oracle: first leaf whose cumulative sum exceeds s
    double acc = 0.0;
    int expected = -1;
    for (int i = 0; i < tree.size(); ++i) {
      acc += tree.leaf_priority(i);
      if (s < acc) {
        expected = i;
        break;
      }
    }
    CHECK(leaf == expected);
  }
  CHECK_THROWS_AS(tree.find_prefix(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(tree.find_prefix(tree.total()), std::invalid_argument);
}

TEST_CASE("two leaves sample at the 3:1 priority ratio") {
  SumTree tree(2);
  tree.push(exp_tagged(0), 3.0);
  tree.push(exp_tagged(1), 1.0);
  Rng rng(1234);
  int first = 0;
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    first += tree.sample(1, 0.4, rng)[0].index == 0 ? 1 : 0;
  }
  const double ratio = double(first) / double(trials - first);
  CHECK(std::abs(ratio - 3.0) <= 0.02 * 3.0);
}

TEST_CASE("floor keeps zero-error leaves sampleable") {
  SumTree tree(4, 0.6, 1e-2);
  for (int k = 0; k < 4; ++k) {
    tree.push(exp_tagged(k), 1.0);
  }
  tree.update_from_td(std::vector<int>{2}, std::vector<double>{0.0});
  CHECK(tree.leaf_priority(2) == doctest::Approx(std::pow(1e-2, 0.6)));
  CHECK(tree.total() ==
        doctest::Approx(3.0 + std::pow(1e-2, 0.6)).epsilon(1e-12));

  Rng rng(5);
  int hits = 0;
  for (int t = 0; t < 20000; ++t) {
    hits += tree.sample(1, 0.4, rng)[0].index == 2 ? 1 : 0;
  }
  CHECK(hits > 0);
  CHECK(hits < 2000);  // far below the uniform share
}

TEST_CASE("equal priorities give unit importance weights") {
  SumTree tree(4);
  for (int k = 0; k < 4; ++k) {
    tree.push(exp_tagged(k), 2.5);
  }
  Rng rng(7);
  for (const auto& s : tree.sample(4, 0.7, rng)) {
    CHECK(s.weight == 1.0);
  }
}

TEST_CASE("importance weights downweight high-priority leaves") {
  SumTree tree(2);
  tree.push(exp_tagged(0), 9.0);
  tree.push(exp_tagged(1), 1.0);
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    for (const auto& s : tree.sample(2, 1.0, rng)) {
      CHECK(s.weight <= 1.0);
      if (s.index == 1) {
        CHECK(s.weight == doctest::Approx(1.0));  // rarest leaf has max weight
      }
    }
  }
}

TEST_CASE("update_priorities validates its inputs") {
  SumTree tree(4);
  tree.push(exp_tagged(0));
  CHECK_THROWS_AS(tree.set_leaf_priority(1, 1.0), std::out_of_range);
  CHECK_THROWS_AS(tree.set_leaf_priority(-1, 1.0), std::out_of_range);
  CHECK_THROWS_AS(tree.set_leaf_priority(0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(tree.update_from_td(std::vector<int>{0, 1},
                                      std::vector<double>{1.0}),
                  std::invalid_argument);
}

TEST_CASE("tree ring overwrite keeps sums consistent") {
  SumTree tree(4);
  for (int k = 0; k < 11; ++k) {
    tree.push(exp_tagged(k), 1.0 + k);
  }
  CHECK(tree.size() == 4);
  CHECK(tree.total() == doctest::Approx(leaf_sum(tree)).epsilon(1e-12));
  // the latest pushes replaced the oldest leaves
  CHECK(tree.at(2).r == 10.0);
}

TEST_CASE("replay buffer mode switch") {
  Rng rng(3);
  ReplayBuffer uniform(ReplayMode::uniform, 16);
  ReplayBuffer prioritized(ReplayMode::prioritized, 16);
  for (int k = 0; k < 8; ++k) {
    uniform.push(exp_tagged(k));
    prioritized.push(exp_tagged(k));
  }
  CHECK(uniform.size() == 8);
  CHECK(prioritized.size() == 8);
  for (const auto& s : uniform.sample(4, 0.4, rng)) {
    CHECK(s.weight == 1.0);
  }
  const auto batch = prioritized.sample(4, 0.4, rng);
  std::vector<int> indices;
  std::vector<double> errors;
  for (const auto& s : batch) {
    indices.push_back(s.index);
    errors.push_back(2.0);
  }
  prioritized.update_priorities(indices, errors);
  // uniform mode ignores priority updates
  uniform.update_priorities(indices, errors);
}
