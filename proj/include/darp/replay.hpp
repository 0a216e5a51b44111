#pragma once

#include <span>
#include <vector>

#include "darp/grid_network.hpp"
#include "darp/rng.hpp"

namespace darp {

// One transition tuple e_t = (s_t, a_t, r_t, s_{t+1}, done).
struct Experience {
  GridCoord s{};
  Direction a = Direction::up;
  double r = 0.0;
  GridCoord s_next{};
  bool done = false;
};

// A sampled transition with its buffer index and importance weight.
struct SampledExperience {
  int index = 0;
  Experience e{};
  double weight = 1.0;
};

// Fixed-capacity ring buffer with uniform without-replacement sampling.
class UniformBuffer {
 public:
  explicit UniformBuffer(int capacity);

  void push(const Experience& e);
  int size() const { return size_; }
  int capacity() const { return capacity_; }
  const Experience& at(int index) const { return store_[index]; }

  // Throws std::invalid_argument when batch_size exceeds the fill.
  std::vector<SampledExperience> sample(int batch_size, Rng& rng) const;

 private:
  int capacity_;
  int size_ = 0;
  int cursor_ = 0;
  std::vector<Experience> store_;
};

// Prioritized replay: a complete binary tree over leaf priorities whose
// internal nodes hold subtree sums (plus a parallel max tree so new samples
// can take the current maximum priority). Sampling is stratified
// proportional-to-priority with importance weights (N*P(i))^-beta,
// normalized by the largest weight in the batch. TD errors map to stored
// priorities as (|delta| + priority_floor)^priority_exponent.
class SumTree {
 public:
  explicit SumTree(int capacity, double priority_exponent = 0.6,
                   double priority_floor = 1e-2);

  // New entries get the current max leaf priority (1 when empty) so every
  // experience is sampled at least once.
  void push(const Experience& e);
  void push(const Experience& e, double priority);

  int size() const { return size_; }
  int capacity() const { return capacity_; }
  double total() const { return sum_[1]; }
  double max_priority() const { return size_ == 0 ? 0.0 : max_[1]; }
  double leaf_priority(int index) const { return sum_[base_ + index]; }
  const Experience& at(int index) const { return store_[index]; }
  double priority_exponent() const { return priority_exponent_; }
  double priority_floor() const { return priority_floor_; }

  // Raw priority write (test and bootstrap hook); ancestors update in
  // O(log capacity). Throws on invalid index or negative priority.
  void set_leaf_priority(int index, double priority);

  // Stored priority (|delta| + floor)^exponent per updated leaf.
  void update_from_td(std::span<const int> indices,
                      std::span<const double> td_errors);

  // Maps a prefix mass s in [0, total) to the unique leaf whose cumulative
  // interval contains it.
  int find_prefix(double s) const;

  // Stratified proportional sample of batch_size leaves.
  std::vector<SampledExperience> sample(int batch_size, double beta,
                                        Rng& rng) const;

 private:
  int capacity_;
  int base_ = 1;  // leaf row offset, smallest power of two >= capacity
  int size_ = 0;
  int cursor_ = 0;
  double priority_exponent_;
  double priority_floor_;
  std::vector<double> sum_;  // 1-based heap; leaves at [base, base+capacity)
  std::vector<double> max_;
  std::vector<Experience> store_;
};

enum class ReplayMode { uniform, prioritized };

// Mode switch over the two buffer types with one sampling surface.
class ReplayBuffer {
 public:
  ReplayBuffer(ReplayMode mode, int capacity, double priority_exponent = 0.6,
               double priority_floor = 1e-2);

  ReplayMode mode() const { return mode_; }
  int size() const;
  void push(const Experience& e);
  std::vector<SampledExperience> sample(int batch_size, double beta, Rng& rng);

  // No-op in uniform mode.
  void update_priorities(std::span<const int> indices,
                         std::span<const double> td_errors);

 private:
  ReplayMode mode_;
  UniformBuffer uniform_;
  SumTree tree_;
};

}  // namespace darp
