#include "rsd/sac.hpp"

#include <cmath>
#include <numbers>

namespace rsd {
namespace {

constexpr Scalar kHalfLog2Pi = 0.91893853320467274178;  // 0.5 log(2 pi)

Scalar softplus(Scalar x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// log(1 - tanh(u)^2) without cancellation.
Scalar log_one_minus_tanh_sq(Scalar u) { return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u)); }

std::vector<Index> hidden_widths(Index in, Index width, int layers, Index out) {
  std::vector<Index> w{in};
  for (int i = 0; i < layers; ++i) w.push_back(width);
  w.push_back(out);
  return w;
}

Scalar fingerprint(const TransitionBatch& b) {
  return b.obs.sum() + 3.0 * b.actions.sum() + 7.0 * b.next_obs.sum() + 11.0 * b.skills.sum();
}

struct TwinQ {
  Net::Tape tape1, tape2;
  Matrix q1, q2;
  Vector min_q;
  std::vector<bool> first;  // q1 is the active branch of the min
};

TwinQ twin_forward(const Net& q1, const Net& q2, const Matrix& in) {
  TwinQ t;
  t.q1 = q1.forward(in, t.tape1);
  t.q2 = q2.forward(in, t.tape2);
  const Index B = in.cols();
  t.min_q.resize(B);
  t.first.resize(B);
  for (Index j = 0; j < B; ++j) {
    t.first[j] = t.q1(0, j) <= t.q2(0, j);
    t.min_q(j) = t.first[j] ? t.q1(0, j) : t.q2(0, j);
  }
  return t;
}

// Gradient of sum_j w_j min(q1, q2)_j with respect to the critic input.
Matrix twin_backward(const Net& q1, const Net& q2, const TwinQ& t, const Vector& w) {
  const Index B = w.size();
  Matrix g1 = Matrix::Zero(1, B), g2 = Matrix::Zero(1, B);
  for (Index j = 0; j < B; ++j) (t.first[j] ? g1 : g2)(0, j) = w(j);
  return q1.backward(t.tape1, g1, nullptr) + q2.backward(t.tape2, g2, nullptr);
}

}  // namespace

AgentParams make_agent(Index skill_dim, Index width, int layers, const ObservationScaler& scaler, Scalar gamma,
                       Scalar tau, Scalar alpha_init, Rng& rng) {
  AgentParams a;
  a.online.skill_dim = skill_dim;
  a.online.scaler = scaler;
  a.online.policy = Net::build(hidden_widths(4 + skill_dim, width, layers, 2 * kActionDim), nn::Activation::kRelu,
                               nn::Activation::kLinear, rng, 0.01);
  const auto critic_widths = hidden_widths(4 + kActionDim + skill_dim, width, layers, 1);
  a.online.q1 = Net::build(critic_widths, nn::Activation::kRelu, nn::Activation::kLinear, rng);
  a.online.q2 = Net::build(critic_widths, nn::Activation::kRelu, nn::Activation::kLinear, rng);
  a.online.log_alpha = std::log(alpha_init);
  a.q1_target = a.online.q1;
  a.q2_target = a.online.q2;
  a.gamma = gamma;
  a.tau = tau;
  return a;
}

AgentOptimizers make_optimizers(const AgentParams& agent, Scalar lr, Scalar alpha_lr) {
  return {Adam(agent.online.policy.parameter_count(), lr), Adam(agent.online.q1.parameter_count(), lr),
          Adam(agent.online.q2.parameter_count(), lr), Adam(1, alpha_lr)};
}

Matrix policy_inputs(const ActorCritic& model, const Matrix& obs, const Matrix& skills) {
  Matrix in(4 + skills.rows(), obs.cols());
  in.topRows(4) = model.scaler.apply(obs);
  in.bottomRows(skills.rows()) = skills;
  return in;
}

Matrix critic_inputs(const Matrix& policy_in, const Matrix& actions) {
  const Index d = policy_in.rows() - 4;
  Matrix in(4 + actions.rows() + d, policy_in.cols());
  in.topRows(4) = policy_in.topRows(4);
  in.middleRows(4, actions.rows()) = actions;
  in.bottomRows(d) = policy_in.bottomRows(d);
  return in;
}

PolicySample sample_policy(const Net& policy, const Matrix& policy_in, const Matrix& noise) {
  PolicySample s;
  const Matrix out = policy.forward(policy_in, s.tape);
  const Index B = policy_in.cols();
  s.mean = out.topRows(kActionDim);
  s.log_std_raw = out.bottomRows(kActionDim);
  s.log_std = s.log_std_raw.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  s.noise = noise;
  const Matrix u = s.mean + (s.log_std.array().exp() * noise.array()).matrix();
  s.actions = u.array().tanh().matrix();
  s.log_prob.resize(B);
  for (Index j = 0; j < B; ++j) {
    Scalar lp = 0;
    for (Index i = 0; i < kActionDim; ++i)
      lp += -0.5 * noise(i, j) * noise(i, j) - s.log_std(i, j) - kHalfLog2Pi - log_one_minus_tanh_sq(u(i, j));
    s.log_prob(j) = lp;
  }
  return s;
}

Matrix backward_policy(const Net& policy, const PolicySample& s, const Matrix& d_actions, const Vector& d_log_prob,
                       Net* grads) {
  const Index B = s.actions.cols();
  Matrix grad_out(2 * kActionDim, B);
  for (Index j = 0; j < B; ++j) {
    for (Index i = 0; i < kActionDim; ++i) {
      const Scalar a = s.actions(i, j);
      // d/du: tanh' for the action, +2 tanh(u) from -log(1 - tanh^2 u).
      const Scalar du = d_actions(i, j) * (1.0 - a * a) + d_log_prob(j) * 2.0 * a;
      grad_out(i, j) = du;
      const Scalar raw = s.log_std_raw(i, j);
      const bool inside = raw >= kLogStdMin && raw <= kLogStdMax;
      const Scalar dls = du * std::exp(s.log_std(i, j)) * s.noise(i, j) - d_log_prob(j);
      grad_out(kActionDim + i, j) = inside ? dls : 0.0;
    }
  }
  return policy.backward(s.tape, grad_out, grads);
}

Vector2 act(const ActorCritic& model, const Observation& s, const Vector& z, ActMode mode, Rng& rng) {
  const Matrix obs = s;
  const Matrix skills = z;
  if (mode == ActMode::kDeterministic) return act_deterministic(model, obs, skills).col(0);
  return act_stochastic(model, obs, skills, rng.normal_matrix(kActionDim, 1)).col(0);
}

Matrix act_deterministic(const ActorCritic& model, const Matrix& obs, const Matrix& skills) {
  const Matrix out = model.policy.forward(policy_inputs(model, obs, skills));
  return out.topRows(kActionDim).array().tanh().matrix();
}

Matrix act_stochastic(const ActorCritic& model, const Matrix& obs, const Matrix& skills, const Matrix& noise) {
  const Matrix out = model.policy.forward(policy_inputs(model, obs, skills));
  const Matrix log_std = out.bottomRows(kActionDim).cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  return (out.topRows(kActionDim).array() + log_std.array().exp() * noise.array()).tanh().matrix();
}

Vector critic_targets(const AgentParams& agent, const TransitionBatch& batch, const Matrix& next_noise) {
  const ActorCritic& m = agent.online;
  const Matrix next_in = policy_inputs(m, batch.next_obs, batch.skills);
  const PolicySample next = sample_policy(m.policy, next_in, next_noise);
  const Matrix q_in = critic_inputs(next_in, next.actions);
  const Matrix t1 = agent.q1_target.forward(q_in);
  const Matrix t2 = agent.q2_target.forward(q_in);
  const Vector min_t = t1.cwiseMin(t2).row(0).transpose();
  return batch.rewards + agent.gamma * (min_t - m.alpha() * next.log_prob);
}

SacStats sac_update(AgentParams& agent, AgentOptimizers& opt, const TransitionBatch& batch, Rng& rng) {
  const Index B = batch.size();
  if (B == 0) throw ConfigError("sac_update: empty batch");
  if (batch.rewards.size() != B) throw ConfigError("sac_update: rewards not filled");
  ActorCritic& m = agent.online;
  SacStats stats;
  const Scalar inv_b = 1.0 / static_cast<Scalar>(B);

  // Critics.
  const Vector y = critic_targets(agent, batch, rng.normal_matrix(kActionDim, B));
  const Matrix in = policy_inputs(m, batch.obs, batch.skills);
  const Matrix q_in = critic_inputs(in, batch.actions);
  Scalar critic_loss = 0;
  for (int k = 0; k < 2; ++k) {
    Net& q = k == 0 ? m.q1 : m.q2;
    Adam& o = k == 0 ? opt.q1 : opt.q2;
    Net::Tape tape;
    const Matrix pred = q.forward(q_in, tape);
    const Matrix residual = pred - y.transpose();
    critic_loss += 0.5 * residual.squaredNorm() * inv_b;
    Net grads = q.zeros_like();
    q.backward(tape, residual * inv_b, &grads);
    if (!std::isfinite(critic_loss))
      throw NumericError("sac_update: critic", "batch fingerprint " + std::to_string(fingerprint(batch)));
    nn::adam_step(q, grads, o);
  }
  stats.critic_loss = 0.5 * critic_loss;

  // Policy: minimise mean(alpha log pi - min Q).
  const Scalar alpha = m.alpha();
  const PolicySample s = sample_policy(m.policy, in, rng.normal_matrix(kActionDim, B));
  const Matrix pq_in = critic_inputs(in, s.actions);
  const TwinQ tq = twin_forward(m.q1, m.q2, pq_in);
  stats.policy_loss = (alpha * s.log_prob - tq.min_q).mean();
  stats.mean_log_prob = s.log_prob.mean();
  if (!std::isfinite(stats.policy_loss))
    throw NumericError("sac_update: policy", "batch fingerprint " + std::to_string(fingerprint(batch)));
  const Matrix d_in = twin_backward(m.q1, m.q2, tq, Vector::Constant(B, -inv_b));
  Net pgrads = m.policy.zeros_like();
  backward_policy(m.policy, s, d_in.middleRows(4, kActionDim), Vector::Constant(B, alpha * inv_b), &pgrads);
  nn::adam_step(m.policy, pgrads, opt.policy);

  // Temperature: minimise -log_alpha * mean(log pi + target_entropy).
  const Scalar slack = (s.log_prob.array() + agent.target_entropy).mean();
  stats.alpha_loss = -m.log_alpha * slack;
  Vector la(1), ga(1);
  la(0) = m.log_alpha;
  ga(0) = -slack;
  nn::adam_step(la, ga, opt.alpha);
  m.log_alpha = la(0);
  stats.alpha = m.alpha();

  nn::blend_into(agent.q1_target, m.q1, agent.tau);
  nn::blend_into(agent.q2_target, m.q2, agent.tau);
  return stats;
}

ValueEstimate value_of(const ActorCritic& model, const Observation& s, const Matrix& skills, int n_samples,
                       std::uint64_t seed, bool with_grad) {
  if (n_samples < 1) throw ConfigError("value_of: n_samples must be >= 1");
  const Index nz = skills.cols();
  const Index d = skills.rows();
  const Index cols = nz * n_samples;
  Matrix obs(4, cols);
  Matrix rep(d, cols);
  for (Index k = 0; k < nz; ++k)
    for (int j = 0; j < n_samples; ++j) {
      obs.col(k * n_samples + j) = s;
      rep.col(k * n_samples + j) = skills.col(k);
    }
  Rng rng(seed);
  const Matrix noise = rng.normal_matrix(kActionDim, cols);
  const Matrix in = policy_inputs(model, obs, rep);
  const PolicySample ps = sample_policy(model.policy, in, noise);
  const Matrix q_in = critic_inputs(in, ps.actions);
  const TwinQ tq = twin_forward(model.q1, model.q2, q_in);
  const Scalar alpha = model.alpha();
  const Vector per_sample = tq.min_q - alpha * ps.log_prob;

  ValueEstimate est;
  est.values.resize(nz);
  for (Index k = 0; k < nz; ++k) est.values(k) = per_sample.segment(k * n_samples, n_samples).mean();
  if (!with_grad) return est;

  const Scalar w = 1.0 / static_cast<Scalar>(n_samples);
  const Matrix d_q_in = twin_backward(model.q1, model.q2, tq, Vector::Constant(cols, w));
  const Matrix d_pin =
      backward_policy(model.policy, ps, d_q_in.middleRows(4, kActionDim), Vector::Constant(cols, -alpha * w), nullptr);
  const Matrix d_rep = d_q_in.bottomRows(d) + d_pin.bottomRows(d);
  est.z_grad.resize(d, nz);
  for (Index k = 0; k < nz; ++k) est.z_grad.col(k) = d_rep.middleCols(k * n_samples, n_samples).rowwise().sum();
  return est;
}

ValueEstimate regret(const ActorCritic& current, const StageSnapshot* previous, const Observation& s0,
                     const Matrix& skills, int n_samples, std::uint64_t seed, bool with_grad) {
  if (!previous) {
    ValueEstimate zero{Vector::Zero(skills.cols()), {}};
    if (with_grad) zero.z_grad = Matrix::Zero(skills.rows(), skills.cols());
    return zero;
  }
  ValueEstimate now = value_of(current, s0, skills, n_samples, seed, with_grad);
  const ValueEstimate before = value_of(previous->model, s0, skills, n_samples, seed, with_grad);
  now.values -= before.values;
  if (with_grad) now.z_grad -= before.z_grad;
  return now;
}

}  // namespace rsd
