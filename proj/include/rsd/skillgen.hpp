#pragma once

// Regret-aware skill generators (diagonal Gaussians over [-1, 1]^d) and the
// bounded population they form.

#include <optional>
#include <vector>

#include "rsd/common.hpp"
#include "rsd/nn.hpp"
#include "rsd/sac.hpp"

namespace rsd {

inline constexpr Scalar kStdFloor = 1e-3;
inline constexpr Scalar kLogRatioClamp = 20.0;

// log N(z; mean, diag(std^2)).
template <typename Derived>
Scalar diag_gaussian_logpdf(const Vector& mean, const Vector& log_std, const Eigen::MatrixBase<Derived>& z) {
  constexpr Scalar half_log_2pi = 0.91893853320467274178;
  const auto std_dev = log_std.array().exp();
  return (-0.5 * ((z.array() - mean.array()) / std_dev).square() - log_std.array() - half_log_2pi).sum();
}

struct Generator {
  Vector mean;
  Vector log_std;
  int stage = 0;

  Index dim() const { return mean.size(); }
  Vector std_dev() const { return log_std.array().exp(); }
  template <typename Derived>
  Scalar logpdf(const Eigen::MatrixBase<Derived>& z) const {
    return diag_gaussian_logpdf(mean, log_std, z);
  }
  // Gradients of logpdf(z) with respect to mean and log_std.
  void logpdf_grad(const Vector& z, Vector& d_mean, Vector& d_log_std) const;
  void enforce_floor(Scalar std_floor = kStdFloor);

  static Generator make(const Vector& mean, const Vector& std_dev, int stage);
};

struct PopulationMember {
  Generator gen;
  Scalar regret_score = 0;
};

struct SkillPopulation {
  std::vector<PopulationMember> members;
  Vector weights;  // sampling weights used while collecting
  std::size_t capacity = 15;

  std::size_t size() const { return members.size(); }
  bool empty() const { return members.empty(); }
  void reset_weights();
};

// Draws a member by the sampling weights, then a clipped Gaussian skill. An
// empty population falls back to uniform skills on the box.
Vector sample_skill(const SkillPopulation& pop, Index dim, Rng& rng);

// Unclipped draw from the uniformly weighted mixture.
Vector sample_mixture(const SkillPopulation& pop, Rng& rng);

// log of the uniformly weighted mixture density.
Scalar population_logpdf(const SkillPopulation& pop, const Vector& z);

// Monte Carlo KL(p(z | P) || gen), log-ratio clamped to +-20.
Scalar kl_diversity(const SkillPopulation& pop, const Generator& gen, int samples, Rng& rng);

// max over the buffer of log gen(b); nullopt for an empty buffer.
std::optional<Scalar> proximity(const Generator& gen, const std::vector<Vector>& buffer);

// -E_{z ~ P}[log p(z | P)].
Scalar population_entropy(const SkillPopulation& pop, int samples, Rng& rng);

struct RsgConfig {
  Scalar alpha1 = 5.0;
  Scalar alpha2 = 1.0;
  int steps = 500;
  int skill_batch = 4;   // reparameterised z draws per step
  int kl_samples = 256;  // draws from the population per step
  Scalar lr = 1e-2;
  Scalar std_floor = kStdFloor;
  bool score_function = false;
};

struct RsgResult {
  Generator gen;
  Scalar final_objective = 0;
  Scalar final_regret = 0;
  bool proximity_skipped = false;
};

// Gradient ascent on E[Reg(z)] + alpha1 d_z + alpha2 d_phi starting from `init`.
// Throws NumericError when the objective becomes non-finite.
RsgResult rsg_update(const Generator& init, const SkillPopulation& pop, const RegretField& regret_field,
                     const std::vector<Vector>& buffer, const RsgConfig& cfg, Rng& rng);

// Appends `gen`, evicting the lowest regret score first when full (oldest
// among ties). Weights reset to uniform.
void population_insert(SkillPopulation& pop, const Generator& gen, Scalar regret_score);

// Index that population_insert would evict.
std::size_t eviction_index(const SkillPopulation& pop);

// Softmax of per-member log-density improvements between two batches of final
// state encodings, floored at p_min. Uniform when `old_finals` is empty.
Vector recalibrate_weights(const SkillPopulation& pop, const std::vector<Vector>& new_finals,
                           const std::vector<Vector>& old_finals, Scalar p_min);

// Probability simplex projection with a per-entry floor: raises entries below
// p_min and rescales the rest.
Vector floor_weights(const Vector& weights, Scalar p_min);

}  // namespace rsd
