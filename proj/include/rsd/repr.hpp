#pragma once

// Bounded temporal representation phi with its dual-constrained objective and
// the relative-distance intrinsic reward.

#include <algorithm>
#include <optional>

#include "rsd/common.hpp"
#include "rsd/maze.hpp"
#include "rsd/nn.hpp"
#include "rsd/transition.hpp"

namespace rsd {

struct ReprState {
  Net encoder;  // 4 -> d; tanh output keeps |phi_i| < 1
  ObservationScaler scaler;
  Scalar lambda = 30.0;
  Scalar slack = 1e-3;
  int horizon = 300;  // per-step budget is 1 / horizon

  Index dim() const { return encoder.output_width(); }
  Scalar step_budget() const { return 1.0 / static_cast<Scalar>(horizon); }
};

// width/layers describe the hidden stack. `bounded` selects the tanh head;
// the uniform baseline uses an unbounded linear head.
ReprState make_repr(Index skill_dim, Index width, int layers, const ObservationScaler& scaler, int horizon,
                    Scalar slack, Scalar lambda_init, Rng& rng, bool bounded = true);

Vector encode(const ReprState& repr, const Observation& s);
Matrix encode(const ReprState& repr, const Matrix& observations);

inline constexpr Scalar kDegenerateDistance = 1e-6;

// Unit vector from u_t towards z; nullopt when the two coincide (degenerate
// direction, the caller drops the term).
std::optional<Vector> skill_direction(const Vector& z, const Vector& u_t);

struct ReprObjective {
  Scalar phi_loss = 0;      // -(A + lambda C + w0 C0)
  Scalar lambda_loss = 0;   // lambda * mean(C), constraint detached
  Scalar alignment = 0;     // A
  Scalar constraint = 0;    // mean C over the batch
  Scalar centering = 0;     // C0
  Index used = 0;           // non-degenerate transitions in A
  Index initial_count = 0;  // transitions feeding C0
  bool skipped = false;     // every pair degenerate: no update
};

// Per-transition budget term min(eps, budget - ||delta||).
inline Scalar constraint_term(Scalar slack, Scalar budget, Scalar delta_norm) {
  return std::min(slack, budget - delta_norm);
}

// Evaluates the objective on a batch. When `grads` is non-null the gradient of
// phi_loss with respect to the encoder parameters is accumulated into it.
ReprObjective repr_objective(const ReprState& repr, const TransitionBatch& batch, Scalar centering_weight,
                             Net* grads);

// Projected gradient step on lambda * C: lambda' = max(0, lambda - lr C).
inline Scalar dual_update(Scalar lambda, Scalar constraint_mean, Scalar lr) {
  return std::max(Scalar(0), lambda - lr * constraint_mean);
}

// ||z - phi(s_t)|| - ||z - phi(s_t+1)||.
Scalar intrinsic_reward(const ReprState& repr, const Observation& s, const Observation& s_next, const Vector& z);

// Column-wise reward from already-encoded states.
Vector intrinsic_rewards(const Matrix& phi_s, const Matrix& phi_next, const Matrix& skills);

}  // namespace rsd
