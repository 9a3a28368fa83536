#pragma once

#include <cstddef>
#include <vector>

#include "pipemaint/env/deterioration.hpp"
#include "pipemaint/error.hpp"
#include "pipemaint/rng.hpp"

namespace pipemaint::dqn {

struct Transition {
  env::EncodedState state{};
  env::Action action = env::Action::DoNothing;
  double reward = 0.0;
  env::EncodedState next_state{};
  bool done = false;
  env::PipeState raw_state;
  env::PipeState raw_next_state;
};

/// Fixed-capacity FIFO of transitions with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw UsageError("replay buffer capacity must be positive");
    storage_.reserve(capacity);
  }

  void push(Transition transition) {
    if (storage_.size() < capacity_) {
      storage_.push_back(std::move(transition));
    } else {
      storage_[cursor_] = std::move(transition);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }

  /// Logical index: 0 is the oldest retained transition.
  const Transition& at(std::size_t index) const {
    if (index >= storage_.size()) throw UsageError("replay buffer index out of range");
    const std::size_t start = storage_.size() < capacity_ ? 0 : cursor_;
    return storage_[(start + index) % capacity_];
  }

  /// Uniform logical index in [0, size).
  std::size_t sample_index(Rng& rng) const {
    if (storage_.empty()) throw UsageError("sampling from an empty replay buffer");
    return static_cast<std::size_t>(rng.below(storage_.size()));
  }

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Transition> storage_;
};

}  // namespace pipemaint::dqn
