#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rsd/common.hpp"
#include "rsd/maze.hpp"
#include "rsd/transition.hpp"

namespace rsd {

// FIFO ring of (s, a, s', z, initial) records. Storage grows on demand up to
// `capacity`, then the oldest record is overwritten.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, Index skill_dim, Index action_dim = 2);

  void push(const Observation& s, const Vector& a, const Observation& s_next, const Vector& z, bool initial);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  // Total records ever pushed.
  std::uint64_t pushed() const { return pushed_; }

  // Uniform sample with replacement. Rewards are left empty.
  TransitionBatch sample(Index batch_size, Rng& rng) const;
  // Records by age: 0 is the oldest retained record.
  TransitionBatch gather(const std::vector<std::size_t>& ages) const;

  void save(const std::string& path) const;
  static ReplayBuffer load(const std::string& path);

  friend bool operator==(const ReplayBuffer&, const ReplayBuffer&) = default;

 private:
  std::size_t slot(std::size_t age) const;
  TransitionBatch gather_slots(const std::vector<std::size_t>& slots) const;

  std::size_t capacity_;
  Index skill_dim_;
  Index action_dim_;
  Index width_;
  std::vector<Scalar> data_;
  std::size_t head_ = 0;  // next slot to write once full
  std::size_t size_ = 0;
  std::uint64_t pushed_ = 0;
};

// Encoded states of the current stage; final states flagged.
struct StageReprBuffer {
  std::vector<Vector> states;
  std::vector<bool> final_flags;

  void add(const Vector& u, bool is_final) {
    states.push_back(u);
    final_flags.push_back(is_final);
  }
  void clear() {
    states.clear();
    final_flags.clear();
  }
  std::size_t size() const { return states.size(); }
  std::vector<Vector> finals() const;
};

}  // namespace rsd
