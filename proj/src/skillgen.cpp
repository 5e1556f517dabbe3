#include "rsd/skillgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rsd {
namespace {

Scalar log_sum_exp(const Vector& v) {
  const Scalar m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

Vector softmax(const Vector& w) {
  const Vector e = (w.array() - w.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace

void Generator::logpdf_grad(const Vector& z, Vector& d_mean, Vector& d_log_std) const {
  const Vector s = std_dev();
  const Vector r = (z - mean).cwiseQuotient(s);
  d_mean = r.cwiseQuotient(s);
  d_log_std = r.array().square() - 1.0;
}

void Generator::enforce_floor(Scalar std_floor) { log_std = log_std.cwiseMax(std::log(std_floor)); }

Generator Generator::make(const Vector& mean, const Vector& std_dev, int stage) {
  Generator g;
  g.mean = mean;
  g.log_std = std_dev.array().log();
  g.stage = stage;
  g.enforce_floor();
  return g;
}

void SkillPopulation::reset_weights() {
  weights = members.empty() ? Vector() : Vector::Constant(members.size(), 1.0 / static_cast<Scalar>(members.size()));
}

Vector sample_skill(const SkillPopulation& pop, Index dim, Rng& rng) {
  if (pop.empty()) {
    Vector z(dim);
    for (Index i = 0; i < dim; ++i) z(i) = rng.uniform(-1.0, 1.0);
    return z;
  }
  const Scalar u = rng.uniform();
  std::size_t pick = pop.size() - 1;
  Scalar acc = 0;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    acc += pop.weights(i);
    if (u < acc && pop.weights(i) > 0) {
      pick = i;
      break;
    }
  }
  // Guard against the rounding tail landing on a zero-weight member.
  while (pop.weights(pick) <= 0 && pick > 0) --pick;
  const Generator& g = pop.members[pick].gen;
  const Vector s = g.std_dev();
  Vector z(g.dim());
  for (Index i = 0; i < g.dim(); ++i) z(i) = g.mean(i) + s(i) * rng.normal();
  return z.cwiseMax(-1.0).cwiseMin(1.0);
}

Vector sample_mixture(const SkillPopulation& pop, Rng& rng) {
  const Generator& g = pop.members[rng.index(pop.size())].gen;
  const Vector s = g.std_dev();
  Vector z(g.dim());
  for (Index i = 0; i < g.dim(); ++i) z(i) = g.mean(i) + s(i) * rng.normal();
  return z;
}

Scalar population_logpdf(const SkillPopulation& pop, const Vector& z) {
  if (pop.empty()) throw ConfigError("population_logpdf on an empty population");
  Vector lp(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) lp(i) = pop.members[i].gen.logpdf(z);
  return log_sum_exp(lp) - std::log(static_cast<Scalar>(pop.size()));
}

Scalar kl_diversity(const SkillPopulation& pop, const Generator& gen, int samples, Rng& rng) {
  if (samples < 1) throw ConfigError("kl_diversity: samples must be >= 1");
  Scalar sum = 0;
  for (int m = 0; m < samples; ++m) {
    const Vector z = sample_mixture(pop, rng);
    sum += std::clamp(population_logpdf(pop, z) - gen.logpdf(z), -kLogRatioClamp, kLogRatioClamp);
  }
  return sum / samples;
}

std::optional<Scalar> proximity(const Generator& gen, const std::vector<Vector>& buffer) {
  if (buffer.empty()) return std::nullopt;
  Scalar best = -std::numeric_limits<Scalar>::infinity();
  for (const auto& b : buffer) best = std::max(best, gen.logpdf(b));
  return best;
}

Scalar population_entropy(const SkillPopulation& pop, int samples, Rng& rng) {
  if (samples < 1) throw ConfigError("population_entropy: samples must be >= 1");
  Scalar sum = 0;
  for (int m = 0; m < samples; ++m) sum += population_logpdf(pop, sample_mixture(pop, rng));
  return -sum / samples;
}

RsgResult rsg_update(const Generator& init, const SkillPopulation& pop, const RegretField& regret_field,
                     const std::vector<Vector>& buffer, const RsgConfig& cfg, Rng& rng) {
  RsgResult res{init, 0, 0, buffer.empty()};
  Generator& g = res.gen;
  g.enforce_floor(cfg.std_floor);
  const Index d = g.dim();
  Vector params(2 * d);
  Adam opt(2 * d, cfg.lr);

  for (int step = 0; step < cfg.steps; ++step) {
    const Vector s = g.std_dev();
    Vector d_mean = Vector::Zero(d), d_log_std = Vector::Zero(d);

    // Regret term.
    const int nz = std::max(1, cfg.skill_batch);
    const Matrix noise = rng.normal_matrix(d, nz);
    Matrix raw = (noise.array().colwise() * s.array()).matrix();
    raw.colwise() += g.mean;
    const Matrix z = raw.cwiseMax(-1.0).cwiseMin(1.0);
    const ValueEstimate reg = regret_field.evaluate(z, rng);
    const Scalar reg_mean = reg.values.mean();
    if (cfg.score_function) {
      for (Index k = 0; k < nz; ++k) {
        Vector gm, gs;
        g.logpdf_grad(raw.col(k), gm, gs);
        d_mean += (reg.values(k) - reg_mean) * gm / nz;
        d_log_std += (reg.values(k) - reg_mean) * gs / nz;
      }
    } else {
      for (Index k = 0; k < nz; ++k)
        for (Index i = 0; i < d; ++i) {
          const bool inside = raw(i, k) >= -1.0 && raw(i, k) <= 1.0;
          if (!inside) continue;
          d_mean(i) += reg.z_grad(i, k) / nz;
          d_log_std(i) += reg.z_grad(i, k) * s(i) * noise(i, k) / nz;
        }
    }
    Scalar objective = reg_mean;

    // Diversity: d/dtheta of mean clamp(log p - log g) = -mean d log g for the
    // unclamped draws.
    if (!pop.empty() && cfg.alpha1 != 0) {
      Scalar sum = 0;
      Vector km = Vector::Zero(d), ks = Vector::Zero(d);
      for (int m = 0; m < cfg.kl_samples; ++m) {
        const Vector zp = sample_mixture(pop, rng);
        const Scalar ratio = population_logpdf(pop, zp) - g.logpdf(zp);
        sum += std::clamp(ratio, -kLogRatioClamp, kLogRatioClamp);
        if (ratio > -kLogRatioClamp && ratio < kLogRatioClamp) {
          Vector gm, gs;
          g.logpdf_grad(zp, gm, gs);
          km -= gm;
          ks -= gs;
        }
      }
      objective += cfg.alpha1 * sum / cfg.kl_samples;
      d_mean += cfg.alpha1 * km / cfg.kl_samples;
      d_log_std += cfg.alpha1 * ks / cfg.kl_samples;
    }

    // Proximity to the nearest seen representation.
    if (!buffer.empty() && cfg.alpha2 != 0) {
      std::size_t best = 0;
      Scalar best_lp = -std::numeric_limits<Scalar>::infinity();
      for (std::size_t b = 0; b < buffer.size(); ++b) {
        const Scalar lp = g.logpdf(buffer[b]);
        if (lp > best_lp) {
          best_lp = lp;
          best = b;
        }
      }
      Vector gm, gs;
      g.logpdf_grad(buffer[best], gm, gs);
      objective += cfg.alpha2 * best_lp;
      d_mean += cfg.alpha2 * gm;
      d_log_std += cfg.alpha2 * gs;
    }

    if (!std::isfinite(objective) || !d_mean.allFinite() || !d_log_std.allFinite())
      throw NumericError("rsg_update", "step " + std::to_string(step));
    res.final_objective = objective;
    res.final_regret = reg_mean;

    params << g.mean, g.log_std;
    Vector grad(2 * d);
    grad << -d_mean, -d_log_std;  // Adam descends; the objective is maximised
    nn::adam_step(params, grad, opt);
    g.mean = params.head(d);
    g.log_std = params.tail(d);
    g.enforce_floor(cfg.std_floor);
  }
  return res;
}

std::size_t eviction_index(const SkillPopulation& pop) {
  std::size_t worst = 0;
  for (std::size_t i = 1; i < pop.size(); ++i) {
    const auto& a = pop.members[i];
    const auto& w = pop.members[worst];
    if (a.regret_score < w.regret_score || (a.regret_score == w.regret_score && a.gen.stage < w.gen.stage)) worst = i;
  }
  return worst;
}

void population_insert(SkillPopulation& pop, const Generator& gen, Scalar regret_score) {
  if (pop.capacity == 0) throw ConfigError("population capacity must be positive");
  if (pop.size() >= pop.capacity) pop.members.erase(pop.members.begin() + eviction_index(pop));
  pop.members.push_back({gen, regret_score});
  pop.reset_weights();
}

Vector floor_weights(const Vector& weights, Scalar p_min) {
  const Index n = weights.size();
  if (p_min * n > 1.0 + 1e-12) throw ConfigError("p_min too large for population size");
  Vector w = weights / weights.sum();
  std::vector<bool> fixed(n, false);
  // Each pass pins at least one more entry, so n passes suffice.
  for (Index pass = 0; pass <= n; ++pass) {
    Scalar free_mass = 0;
    Index n_fixed = 0;
    for (Index i = 0; i < n; ++i) {
      if (fixed[i]) ++n_fixed;
      else free_mass += w(i);
    }
    const Scalar target = 1.0 - p_min * n_fixed;
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      if (fixed[i]) {
        w(i) = p_min;
        continue;
      }
      w(i) = free_mass > 0 ? w(i) * target / free_mass : target / (n - n_fixed);
    }
    for (Index i = 0; i < n; ++i)
      if (!fixed[i] && w(i) < p_min) {
        fixed[i] = true;
        changed = true;
      }
    if (!changed) break;
  }
  for (Index i = 0; i < n; ++i) w(i) = std::max(w(i), p_min);
  return w / w.sum();
}

Vector recalibrate_weights(const SkillPopulation& pop, const std::vector<Vector>& new_finals,
                           const std::vector<Vector>& old_finals, Scalar p_min) {
  const Index n = static_cast<Index>(pop.size());
  if (n == 0) return {};
  if (old_finals.empty() || new_finals.empty()) return Vector::Constant(n, 1.0 / n);
  Vector w(n);
  for (Index i = 0; i < n; ++i) {
    const Generator& g = pop.members[i].gen;
    w(i) = *proximity(g, new_finals) - *proximity(g, old_finals);
  }
  return floor_weights(softmax(w), p_min);
}

}  // namespace rsd
