#include "rsd/repr.hpp"

#include <cmath>

namespace rsd {

ReprState make_repr(Index skill_dim, Index width, int layers, const ObservationScaler& scaler, int horizon,
                    Scalar slack, Scalar lambda_init, Rng& rng, bool bounded) {
  std::vector<Index> widths{4};
  for (int i = 0; i < layers; ++i) widths.push_back(width);
  widths.push_back(skill_dim);
  ReprState r;
  r.encoder = Net::build(widths, nn::Activation::kRelu, bounded ? nn::Activation::kTanh : nn::Activation::kLinear, rng);
  r.scaler = scaler;
  r.horizon = horizon;
  r.slack = slack;
  r.lambda = lambda_init;
  return r;
}

Vector encode(const ReprState& repr, const Observation& s) {
  return repr.encoder.forward(Matrix(repr.scaler.apply(s))).col(0);
}

Matrix encode(const ReprState& repr, const Matrix& observations) {
  return repr.encoder.forward(repr.scaler.apply(observations));
}

std::optional<Vector> skill_direction(const Vector& z, const Vector& u_t) {
  const Vector diff = z - u_t;
  const Scalar n = diff.norm();
  if (n < kDegenerateDistance) return std::nullopt;
  return Vector(diff / n);
}

ReprObjective repr_objective(const ReprState& repr, const TransitionBatch& batch, Scalar centering_weight,
                             Net* grads) {
  const Index B = batch.size();
  if (B == 0) return {.skipped = true};
  Net::Tape tape_s, tape_next;
  const Matrix u = repr.encoder.forward(repr.scaler.apply(batch.obs), tape_s);
  const Matrix v = repr.encoder.forward(repr.scaler.apply(batch.next_obs), tape_next);
  const Matrix delta = v - u;
  const Index d = u.rows();

  ReprObjective out;
  Matrix d_u = Matrix::Zero(d, B);  // d(objective)/du, later negated
  Matrix d_v = Matrix::Zero(d, B);

  // Alignment with the rescaled skill direction, differentiated through u_t.
  Scalar align_sum = 0;
  std::vector<Index> valid;
  for (Index j = 0; j < B; ++j) {
    const Vector e = batch.skills.col(j) - u.col(j);
    const Scalar n = e.norm();
    if (n < kDegenerateDistance) continue;
    valid.push_back(j);
    const Vector dir = e / n;
    align_sum += delta.col(j).dot(dir);
  }
  out.used = static_cast<Index>(valid.size());
  if (valid.empty()) {
    out.skipped = true;
    return out;
  }
  const Scalar inv_used = 1.0 / static_cast<Scalar>(valid.size());
  out.alignment = align_sum * inv_used;
  for (Index j : valid) {
    const Vector e = batch.skills.col(j) - u.col(j);
    const Scalar n = e.norm();
    const Vector dir = e / n;
    const Vector dl = delta.col(j);
    d_v.col(j) += inv_used * dir;
    // d(dl . dir)/du = -dir - (I - dir dir^T) dl / n
    d_u.col(j) += inv_used * (-dir - (dl - dir * dir.dot(dl)) / n);
  }

  // Per-step budget. At the min tie the slack branch (constant) is active.
  const Scalar budget = repr.step_budget();
  Scalar c_sum = 0;
  Matrix d_c_v = Matrix::Zero(d, B);
  for (Index j = 0; j < B; ++j) {
    const Scalar dn = delta.col(j).norm();
    const Scalar rest = budget - dn;
    c_sum += constraint_term(repr.slack, budget, dn);
    if (rest < repr.slack && dn > 0) d_c_v.col(j) = -delta.col(j) / (dn * static_cast<Scalar>(B));
  }
  out.constraint = c_sum / static_cast<Scalar>(B);
  d_v += repr.lambda * d_c_v;
  d_u -= repr.lambda * d_c_v;

  // Centering of initial states: C0 = -mean ||phi(s_0)||.
  Scalar c0_sum = 0;
  std::vector<Index> initial;
  for (Index j = 0; j < B; ++j)
    if (j < static_cast<Index>(batch.initial.size()) && batch.initial[j]) initial.push_back(j);
  out.initial_count = static_cast<Index>(initial.size());
  if (!initial.empty()) {
    const Scalar inv0 = 1.0 / static_cast<Scalar>(initial.size());
    for (Index j : initial) {
      const Scalar n = u.col(j).norm();
      c0_sum += n;
      if (n > 0) d_u.col(j) -= centering_weight * inv0 * u.col(j) / n;
    }
    out.centering = -c0_sum * inv0;
  }

  out.phi_loss = -(out.alignment + repr.lambda * out.constraint + centering_weight * out.centering);
  out.lambda_loss = repr.lambda * out.constraint;
  require_finite(out.phi_loss, "repr_objective");

  if (grads) {
    repr.encoder.backward(tape_s, Matrix(-d_u), grads);
    repr.encoder.backward(tape_next, Matrix(-d_v), grads);
  }
  return out;
}

Scalar intrinsic_reward(const ReprState& repr, const Observation& s, const Observation& s_next, const Vector& z) {
  return (z - encode(repr, s)).norm() - (z - encode(repr, s_next)).norm();
}

Vector intrinsic_rewards(const Matrix& phi_s, const Matrix& phi_next, const Matrix& skills) {
  return ((skills - phi_s).colwise().norm() - (skills - phi_next).colwise().norm()).transpose();
}

}  // namespace rsd
