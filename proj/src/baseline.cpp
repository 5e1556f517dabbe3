#include "rsd/baseline.hpp"

#include <cmath>
#include <numbers>

namespace rsd {

Vector uniform_unit_skill(Index dim, Rng& rng) {
  Vector z(dim);
  do {
    for (Index i = 0; i < dim; ++i) z(i) = rng.normal();
  } while (z.norm() < 1e-12);
  return z / z.norm();
}

Matrix unit_circle_skills(Index count) {
  Matrix z(2, count);
  for (Index k = 0; k < count; ++k) {
    const Scalar angle = 2.0 * std::numbers::pi * static_cast<Scalar>(k) / static_cast<Scalar>(count);
    z(0, k) = std::cos(angle);
    z(1, k) = std::sin(angle);
  }
  return z;
}

Vector metra_rewards(const Matrix& phi_s, const Matrix& phi_next, const Matrix& skills) {
  return (phi_next - phi_s).cwiseProduct(skills).colwise().sum().transpose();
}

ReprObjective metra_repr_objective(const ReprState& repr, const TransitionBatch& batch, Net* grads) {
  const Index B = batch.size();
  if (B == 0) return {.skipped = true};
  Net::Tape tape_s, tape_next;
  const Matrix u = repr.encoder.forward(repr.scaler.apply(batch.obs), tape_s);
  const Matrix v = repr.encoder.forward(repr.scaler.apply(batch.next_obs), tape_next);
  const Matrix delta = v - u;
  const Scalar inv_b = 1.0 / static_cast<Scalar>(B);

  ReprObjective out;
  out.used = B;
  out.alignment = delta.cwiseProduct(batch.skills).sum() * inv_b;
  Matrix d_v = batch.skills * inv_b;
  Scalar c_sum = 0;
  Matrix d_c_v = Matrix::Zero(v.rows(), B);
  for (Index j = 0; j < B; ++j) {
    const Scalar dn = delta.col(j).norm();
    c_sum += constraint_term(repr.slack, 1.0, dn);
    if (1.0 - dn < repr.slack && dn > 0) d_c_v.col(j) = -delta.col(j) / dn * inv_b;
  }
  out.constraint = c_sum * inv_b;
  d_v += repr.lambda * d_c_v;
  const Matrix d_u = -d_v;
  out.phi_loss = -(out.alignment + repr.lambda * out.constraint);
  out.lambda_loss = repr.lambda * out.constraint;
  require_finite(out.phi_loss, "metra_repr_objective");
  if (grads) {
    repr.encoder.backward(tape_s, Matrix(-d_u), grads);
    repr.encoder.backward(tape_next, Matrix(-d_v), grads);
  }
  return out;
}

}  // namespace rsd
