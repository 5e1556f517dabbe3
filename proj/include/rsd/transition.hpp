#pragma once

#include <vector>

#include "rsd/common.hpp"

namespace rsd {

// Column-aligned minibatch of transitions. `initial[j]` marks transitions
// whose source state is the episode start (t = 0).
struct TransitionBatch {
  Matrix obs;       // 4 x B
  Matrix actions;   // action_dim x B
  Matrix next_obs;  // 4 x B
  Matrix skills;    // d x B
  std::vector<bool> initial;
  Vector rewards;   // filled by the trainer from the current encoder

  Index size() const { return obs.cols(); }
};

}  // namespace rsd
