#pragma once

// Uniform-sampling baseline: unit-circle skills, inner-product reward and the
// unit-budget representation objective.

#include "rsd/repr.hpp"

namespace rsd {

// Uniform direction on the unit sphere of dimension `dim`.
Vector uniform_unit_skill(Index dim, Rng& rng);

// `count` evenly spaced unit vectors on the circle (dim 2 only).
Matrix unit_circle_skills(Index count);

// (phi(s') - phi(s)) . z, column-wise.
Vector metra_rewards(const Matrix& phi_s, const Matrix& phi_next, const Matrix& skills);
inline Scalar metra_reward(const Vector& phi_s, const Vector& phi_next, const Vector& z) {
  return (phi_next - phi_s).dot(z);
}

// -(mean delta.z + lambda mean min(eps, 1 - ||delta||)); same fields and
// gradient convention as repr_objective, no centering.
ReprObjective metra_repr_objective(const ReprState& repr, const TransitionBatch& batch, Net* grads);

}  // namespace rsd
