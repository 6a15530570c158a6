#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace herlase::rl {

using Vector = Eigen::VectorXd;

/// One experience tuple. `done` marks a terminal transition (the goal was
/// achieved); running out of episode steps is not terminal and still
/// bootstraps.
struct Transition {
  Vector state;
  Vector goal;
  Vector action;
  double reward = -1.0;
  Vector next_state;
  bool done = false;
};

using Episode = std::vector<Transition>;

/// Fixed-capacity FIFO ring buffer with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void add(Transition t);
  void add(const Episode& episode);

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }

  /// Indices drawn uniformly with replacement.
  std::vector<std::size_t> sample_indices(std::size_t n, std::mt19937_64& rng) const;
  std::vector<const Transition*> sample(std::size_t n, std::mt19937_64& rng) const;

  const Transition& at(std::size_t i) const { return items_.at(i); }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

}  // namespace herlase::rl
