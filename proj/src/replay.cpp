#include "darp/replay.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace darp {

UniformBuffer::UniformBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) {
    throw std::invalid_argument("replay: capacity must be >= 1");
  }
  store_.resize(capacity);
}

void UniformBuffer::push(const Experience& e) {
  store_[cursor_] = e;
  cursor_ = (cursor_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

std::vector<SampledExperience> UniformBuffer::sample(int batch_size,
                                                     Rng& rng) const {
  if (batch_size < 1 || batch_size > size_) {
    throw std::invalid_argument("replay: batch size exceeds buffer fill");
  }
  // Partial Fisher-Yates over the live indices.
  std::vector<int> indices(size_);
  std::iota(indices.begin(), indices.end(), 0);
  std::vector<SampledExperience> out;
  out.reserve(batch_size);
  for (int k = 0; k < batch_size; ++k) {
    std::uniform_int_distribution<int> pick(k, size_ - 1);
    std::swap(indices[k], indices[pick(rng)]);
    out.push_back({indices[k], store_[indices[k]], 1.0});
  }
  return out;
}

SumTree::SumTree(int capacity, double priority_exponent, double priority_floor)
    : capacity_(capacity),
      priority_exponent_(priority_exponent),
      priority_floor_(priority_floor) {
  if (capacity < 1) {
    throw std::invalid_argument("sum tree: capacity must be >= 1");
  }
  if (priority_floor <= 0.0) {
    throw std::invalid_argument("sum tree: priority floor must be > 0");
  }
  // A full power-of-two leaf row keeps the in-order leaf layout aligned
  // with leaf indices, which the prefix lookup relies on.
  while (base_ < capacity) {
    base_ *= 2;
  }
  sum_.assign(static_cast<std::size_t>(2) * base_, 0.0);
  max_.assign(static_cast<std::size_t>(2) * base_, 0.0);
  store_.resize(capacity);
}

void SumTree::set_leaf_priority(int index, double priority) {
  if (index < 0 || index >= size_) {
    throw std::out_of_range("sum tree: leaf index out of range");
  }
  if (!(priority >= 0.0)) {
    throw std::invalid_argument("sum tree: priority must be >= 0");
  }
  std::size_t node = static_cast<std::size_t>(base_) + index;
  sum_[node] = priority;
  max_[node] = priority;
  for (node /= 2; node >= 1; node /= 2) {
    sum_[node] = sum_[2 * node] + sum_[2 * node + 1];
    max_[node] = std::max(max_[2 * node], max_[2 * node + 1]);
  }
}

void SumTree::push(const Experience& e) {
  push(e, size_ == 0 ? 1.0 : max_[1]);
}

void SumTree::push(const Experience& e, double priority) {
  const int index = cursor_;
  store_[index] = e;
  cursor_ = (cursor_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
  set_leaf_priority(index, priority);
}

void SumTree::update_from_td(std::span<const int> indices,
                             std::span<const double> td_errors) {
  if (indices.size() != td_errors.size()) {
    throw std::invalid_argument("sum tree: indices/errors size mismatch");
  }
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const double p =
        std::pow(std::abs(td_errors[k]) + priority_floor_, priority_exponent_);
    set_leaf_priority(indices[k], p);
  }
}

int SumTree::find_prefix(double s) const {
  if (size_ == 0 || !(s >= 0.0) || s >= total()) {
    throw std::invalid_argument("sum tree: prefix out of [0, total)");
  }
  std::size_t node = 1;
  while (node < static_cast<std::size_t>(base_)) {
    const std::size_t left = 2 * node;
    if (s < sum_[left]) {
      node = left;
    } else {
      s -= sum_[left];
      node = left + 1;
    }
  }
  return static_cast<int>(node - base_);
}

std::vector<SampledExperience> SumTree::sample(int batch_size, double beta,
                                               Rng& rng) const {
  if (batch_size < 1 || batch_size > size_) {
    throw std::invalid_argument("sum tree: batch size exceeds buffer fill");
  }
  const double mass = total();
  if (!(mass > 0.0)) {
    throw std::invalid_argument("sum tree: zero total priority");
  }
  std::vector<SampledExperience> out;
  out.reserve(batch_size);
  const double segment = mass / batch_size;
  double max_weight = 0.0;
  for (int k = 0; k < batch_size; ++k) {
    std::uniform_real_distribution<double> pick(k * segment,
                                                (k + 1) * segment);
    double s = std::min(pick(rng), std::nexttoward(mass, 0.0));
    const int index = find_prefix(s);
    const double prob = leaf_priority(index) / mass;
    const double weight = std::pow(size_ * prob, -beta);
    out.push_back({index, store_[index], weight});
    max_weight = std::max(max_weight, weight);
  }
  for (SampledExperience& s : out) {
    s.weight /= max_weight;
  }
  return out;
}

ReplayBuffer::ReplayBuffer(ReplayMode mode, int capacity,
                           double priority_exponent, double priority_floor)
    : mode_(mode),
      uniform_(capacity),
      tree_(capacity, priority_exponent, priority_floor) {}

int ReplayBuffer::size() const {
  return mode_ == ReplayMode::uniform ? uniform_.size() : tree_.size();
}

void ReplayBuffer::push(const Experience& e) {
  if (mode_ == ReplayMode::uniform) {
    uniform_.push(e);
  } else {
    tree_.push(e);
  }
}

std::vector<SampledExperience> ReplayBuffer::sample(int batch_size,
                                                    double beta, Rng& rng) {
  return mode_ == ReplayMode::uniform ? uniform_.sample(batch_size, rng)
                                      : tree_.sample(batch_size, beta, rng);
}

void ReplayBuffer::update_priorities(std::span<const int> indices,
                                     std::span<const double> td_errors) {
  if (mode_ == ReplayMode::prioritized) {
    tree_.update_from_td(indices, td_errors);
  }
}

}  // namespace darp
