#pragma once

// Skill-conditioned soft actor-critic with a tanh-squashed Gaussian policy,
// twin critics and the stage-to-stage regret estimator.

#include <memory>

#include "rsd/common.hpp"
#include "rsd/maze.hpp"
#include "rsd/nn.hpp"
#include "rsd/transition.hpp"

namespace rsd {

inline constexpr Index kActionDim = 2;
inline constexpr Scalar kLogStdMin = -5.0;
inline constexpr Scalar kLogStdMax = 2.0;

// Everything needed to evaluate V(s | z): policy, twin critics and alpha.
struct ActorCritic {
  Net policy;  // (4 + d) -> 2 * action_dim: mean, log-std
  Net q1;      // (4 + action_dim + d) -> 1
  Net q2;
  Scalar log_alpha = std::log(0.01);
  ObservationScaler scaler;
  Index skill_dim = 2;

  Scalar alpha() const { return std::exp(log_alpha); }
};

struct AgentParams {
  ActorCritic online;
  Net q1_target;
  Net q2_target;
  Scalar gamma = 0.99;
  Scalar tau = 0.005;
  Scalar target_entropy = -static_cast<Scalar>(kActionDim);
};

// Frozen copy of the agent from the end of the previous stage.
struct StageSnapshot {
  ActorCritic model;
  int stage = -1;
};
using SnapshotPtr = std::shared_ptr<const StageSnapshot>;

inline SnapshotPtr make_snapshot(const ActorCritic& model, int stage) {
  return std::make_shared<const StageSnapshot>(StageSnapshot{model, stage});
}

struct AgentOptimizers {
  Adam policy;
  Adam q1;
  Adam q2;
  Adam alpha;
};

AgentParams make_agent(Index skill_dim, Index width, int layers, const ObservationScaler& scaler, Scalar gamma,
                       Scalar tau, Scalar alpha_init, Rng& rng);
AgentOptimizers make_optimizers(const AgentParams& agent, Scalar lr, Scalar alpha_lr);

enum class ActMode { kStochastic, kDeterministic };

// Squashed Gaussian sample for a batch of policy inputs with explicit noise.
struct PolicySample {
  Matrix actions;   // action_dim x B, tanh(u)
  Vector log_prob;  // B
  Matrix mean;
  Matrix log_std;   // clamped
  Matrix log_std_raw;
  Matrix noise;
  Net::Tape tape;
};

// Policy input: [scaled obs; z].
Matrix policy_inputs(const ActorCritic& model, const Matrix& obs, const Matrix& skills);
Matrix critic_inputs(const Matrix& policy_in, const Matrix& actions);

PolicySample sample_policy(const Net& policy, const Matrix& policy_in, const Matrix& noise);

// Backpropagates dL/da and dL/dlogpi through the squash and the policy net.
// Returns dL/d(policy input).
Matrix backward_policy(const Net& policy, const PolicySample& sample, const Matrix& d_actions,
                       const Vector& d_log_prob, Net* grads);

Vector2 act(const ActorCritic& model, const Observation& s, const Vector& z, ActMode mode, Rng& rng);
// Deterministic actions tanh(mean) for a batch.
Matrix act_deterministic(const ActorCritic& model, const Matrix& obs, const Matrix& skills);
// Stochastic actions for a batch with pre-drawn noise.
Matrix act_stochastic(const ActorCritic& model, const Matrix& obs, const Matrix& skills, const Matrix& noise);

// r + gamma (min target-Q(s', a') - alpha log pi(a'|s')) with a' drawn using
// `next_noise`.
Vector critic_targets(const AgentParams& agent, const TransitionBatch& batch, const Matrix& next_noise);

struct SacStats {
  Scalar critic_loss = 0;  // mean over the two critics of 0.5 mean (Q - y)^2
  Scalar policy_loss = 0;
  Scalar alpha_loss = 0;
  Scalar mean_log_prob = 0;
  Scalar alpha = 0;
};

// One SAC step on a batch whose `rewards` are already filled.
SacStats sac_update(AgentParams& agent, AgentOptimizers& opt, const TransitionBatch& batch, Rng& rng);

struct ValueEstimate {
  Vector values;  // one per skill column
  Matrix z_grad;  // d x n_skills, empty unless requested
};

// Monte Carlo V(s | z) = E_a[min Q(s, a, z) - alpha log pi(a | s, z)] with
// n_samples actions per skill drawn from Rng(seed).
ValueEstimate value_of(const ActorCritic& model, const Observation& s, const Matrix& skills, int n_samples,
                       std::uint64_t seed, bool with_grad = false);

// V_current - V_previous with paired noise; zero when there is no snapshot.
ValueEstimate regret(const ActorCritic& current, const StageSnapshot* previous, const Observation& s0,
                     const Matrix& skills, int n_samples, std::uint64_t seed, bool with_grad = false);

// Source of Reg(z) and its z-gradient for the skill generator.
class RegretField {
 public:
  virtual ~RegretField() = default;
  virtual ValueEstimate evaluate(const Matrix& skills, Rng& rng) const = 0;
};

class ZeroRegret final : public RegretField {
 public:
  ValueEstimate evaluate(const Matrix& skills, Rng&) const override {
    return {Vector::Zero(skills.cols()), Matrix::Zero(skills.rows(), skills.cols())};
  }
};

class AgentRegret final : public RegretField {
 public:
  AgentRegret(const ActorCritic& current, SnapshotPtr previous, Observation s0, int n_samples)
      : current_(current), previous_(std::move(previous)), s0_(s0), n_samples_(n_samples) {}
  ValueEstimate evaluate(const Matrix& skills, Rng& rng) const override {
    return regret(current_, previous_.get(), s0_, skills, n_samples_, rng.next(), true);
  }

 private:
  const ActorCritic& current_;
  SnapshotPtr previous_;
  Observation s0_;
  int n_samples_;
};

}  // namespace rsd
