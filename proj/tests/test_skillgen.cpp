#include "doctest.h"

#include <numbers>

#include "oracles.hpp"
#include "rsd/skillgen.hpp"

using namespace rsd;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Generator gen(double mx, double my, double sx, double sy, int stage = 0) {
  return Generator::make(v2(mx, my), v2(sx, sy), stage);
}

SkillPopulation population(std::vector<Generator> gens) {
  SkillPopulation p;
  for (auto& g : gens) p.members.push_back({g, 0.0});
  p.reset_weights();
  return p;
}

}  // namespace

TEST_CASE("generator log-density and its gradient") {
  const Generator g = gen(0.2, -0.3, 0.5, 1.5);
  Rng rng(1);
  for (int k = 0; k < 20; ++k) {
    const Vector z = rng.normal_matrix(2, 1).col(0);
    CHECK(g.logpdf(z) == doctest::Approx(oracle::gaussian_logpdf(g.mean, g.std_dev(), z)).epsilon(1e-12));
    Vector dm, ds;
    g.logpdf_grad(z, dm, ds);
    Vector theta(4);
    theta << g.mean, g.log_std;
    const Vector numeric = oracle::fd_gradient(
        [&](const Vector& t) {
          Generator h = g;
          h.mean = t.head(2);
          h.log_std = t.tail(2);
          return h.logpdf(z);
        },
        theta);
    Vector analytic(4);
    analytic << dm, ds;
    CHECK(oracle::rel_error(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("standard deviation floor") {
  const Generator g = gen(0, 0, 1e-6, 0.2);
  CHECK(g.std_dev()(0) == doctest::Approx(kStdFloor));
  CHECK(g.std_dev()(1) == doctest::Approx(0.2));
}

TEST_CASE("sampling: tight component, exclusive weights, clipping") {
  Rng rng(2);
  SkillPopulation tight = population({gen(0, 0, 1e-3, 1e-3)});
  int near = 0;
  for (int k = 0; k < 10000; ++k) near += sample_skill(tight, 2, rng).norm() < 0.01;
  CHECK(near > 9900);

  SkillPopulation two = population({gen(-0.5, -0.5, 0.01, 0.01), gen(0.5, 0.5, 0.01, 0.01)});
  two.weights = v2(1.0, 0.0);
  for (int k = 0; k < 10000; ++k) REQUIRE(sample_skill(two, 2, rng)(0) < 0);

  SkillPopulation outside = population({gen(2, 2, 0.1, 0.1)});
  for (int k = 0; k < 1000; ++k) {
    const Vector z = sample_skill(outside, 2, rng);
    REQUIRE(z.cwiseAbs().maxCoeff() <= 1.0);
    REQUIRE(z.minCoeff() > 0.0);
  }
  SkillPopulation empty;
  for (int k = 0; k < 1000; ++k) REQUIRE(sample_skill(empty, 2, rng).cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("mixture log-density") {
  const Generator a = gen(0.1, 0.2, 0.3, 0.4), b = gen(-0.5, 0.3, 0.2, 0.6);
  const Vector z = v2(0.05, -0.1);
  CHECK(population_logpdf(population({a}), z) == doctest::Approx(a.logpdf(z)).epsilon(1e-12));
  CHECK(population_logpdf(population({a, a}), z) == doctest::Approx(a.logpdf(z)).epsilon(1e-12));
  const std::vector<oracle::Component> mix{{a.mean, a.std_dev()}, {b.mean, b.std_dev()}};
  CHECK(population_logpdf(population({a, b}), z) == doctest::Approx(std::log(oracle::mixture_density(mix, z))).epsilon(1e-12));
  // Sampling weights never enter the density.
  SkillPopulation skew = population({a, b});
  skew.weights = v2(0.99, 0.01);
  CHECK(population_logpdf(skew, z) == population_logpdf(population({a, b}), z));
}

TEST_CASE("diversity of a clone is zero") {
  Rng rng(3);
  const Generator g = gen(0.2, 0.1, 0.3, 0.3);
  CHECK(kl_diversity(population({g}), g, 1000, rng) == 0.0);
}

TEST_CASE("diversity matches the closed-form Gaussian KL") {
  Rng rng(4);
  const Generator p = gen(0, 0, 1, 1), q = gen(1, 0, 1, 1);
  const Scalar kl = kl_diversity(population({p}), q, 20000, rng);
  CHECK(std::abs(kl - 0.5) < 0.05 * 0.5);
}

TEST_CASE("proximity") {
  const Generator g = gen(0.3, -0.2, 0.1, 0.4);
  const Scalar mode = -(std::log(0.1 * std::sqrt(2 * std::numbers::pi)) + std::log(0.4 * std::sqrt(2 * std::numbers::pi)));
  CHECK(*proximity(g, {v2(0.9, 0.9), g.mean, v2(-1, -1)}) == doctest::Approx(mode).epsilon(1e-12));
  const Scalar near = *proximity(g, {v2(1.3, -0.2)});
  const Scalar far = *proximity(g, {v2(2.3, -0.2)});
  CHECK(near < -40);
  CHECK(far < near);
  CHECK(*proximity(g, {v2(1.3, -0.2), v2(1.3, -0.2), v2(1.3, -0.2)}) == near);
  CHECK_FALSE(proximity(g, {}).has_value());
}

TEST_CASE("population entropy") {
  Rng rng(5);
  const Scalar h = population_entropy(population({gen(0, 0, 1, 1)}), 50000, rng);
  CHECK(std::abs(h - std::log(2 * std::numbers::pi * std::numbers::e)) < 0.02 * 2.8379);
  const Scalar half = population_entropy(population({gen(0, 0, 0.5, 0.5)}), 50000, rng);
  CHECK(std::abs((h - half) - 2 * std::log(2.0)) < 0.05);
  const Scalar dup = population_entropy(population({gen(0, 0, 1, 1), gen(0, 0, 1, 1)}), 50000, rng);
  CHECK(std::abs(dup - h) < 0.05);
}

TEST_CASE("entropy and diversity agree with quadrature on fixed mixtures") {
  const std::vector<SkillPopulation> mixtures = {
      population({gen(0.2, -0.1, 0.4, 0.6)}),
      population({gen(-0.5, 0.0, 0.3, 0.3), gen(0.5, 0.2, 0.2, 0.4)}),
      population({gen(-0.6, -0.6, 0.25, 0.25), gen(0.6, -0.4, 0.3, 0.15), gen(0.0, 0.7, 0.2, 0.35)})};
  const Generator q = gen(0.1, 0.1, 0.8, 0.8);
  Rng rng(12);
  for (const auto& p : mixtures) {
    std::vector<oracle::Component> mix;
    for (const auto& m : p.members) mix.push_back({m.gen.mean, m.gen.std_dev()});
    const Scalar hq = oracle::mixture_entropy_quadrature(mix, -6, 6, 600);
    const Scalar kq = oracle::mixture_kl_quadrature(mix, {q.mean, q.std_dev()}, -6, 6, 600);
    CHECK(std::abs(population_entropy(p, 50000, rng) - hq) < 0.05 * std::abs(hq));
    CHECK(std::abs(kl_diversity(p, q, 20000, rng) - kq) < 0.05 * std::abs(kq));
  }
}

TEST_CASE("regret ascent recovers the quadratic optimum") {
  const oracle::QuadraticRegret field(v2(0.5, 0.5));
  RsgConfig cfg;
  cfg.alpha1 = cfg.alpha2 = 0;
  Rng rng(6);
  const RsgResult r = rsg_update(gen(0, 0, 0.5, 0.5), SkillPopulation{}, field, {}, cfg, rng);
  CHECK((r.gen.mean - v2(0.5, 0.5)).norm() < 0.05);
}

TEST_CASE("score-function fallback also climbs the quadratic landscape") {
  const oracle::QuadraticRegret field(v2(0.5, 0.5));
  RsgConfig cfg;
  cfg.alpha1 = cfg.alpha2 = 0;
  cfg.score_function = true;
  cfg.skill_batch = 64;
  cfg.steps = 1000;
  Rng rng(6);
  const RsgResult r = rsg_update(gen(0, 0, 0.5, 0.5), SkillPopulation{}, field, {}, cfg, rng);
  CHECK((r.gen.mean - v2(0.5, 0.5)).norm() < 0.1);
}

TEST_CASE("diversity-only ascent lowers density at the population mode") {
  const oracle::ConstantRegret field(0.0);
  const SkillPopulation pop = population({gen(0, 0, 0.3, 0.3)});
  Generator g = gen(0.05, 0, 0.5, 0.5);
  RsgConfig cfg;
  cfg.alpha2 = 0;
  cfg.steps = 1;
  Rng rng(7);
  Scalar prev = g.logpdf(v2(0, 0));
  for (int k = 0; k < 50; ++k) {
    g = rsg_update(g, pop, field, {}, cfg, rng).gen;
    const Scalar now = g.logpdf(v2(0, 0));
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("proximity-only ascent moves towards the seen point") {
  const oracle::ConstantRegret field(1.0);
  RsgConfig cfg;
  cfg.alpha1 = 0;
  Rng rng(8);
  const RsgResult r = rsg_update(gen(0, 0, 0.5, 0.5), SkillPopulation{}, field, {v2(0.3, 0.3)}, cfg, rng);
  CHECK((r.gen.mean - v2(0.3, 0.3)).norm() < 0.02);
  CHECK_FALSE(r.proximity_skipped);
  CHECK(rsg_update(gen(0, 0, 0.5, 0.5), SkillPopulation{}, field, {}, cfg, rng).proximity_skipped);
}

TEST_CASE("non-finite regret aborts the update") {
  class NanRegret final : public RegretField {
   public:
    ValueEstimate evaluate(const Matrix& skills, Rng&) const override {
      return {Vector::Constant(skills.cols(), std::nan("")), Matrix::Zero(skills.rows(), skills.cols())};
    }
  };
  Rng rng(9);
  CHECK_THROWS_AS(rsg_update(gen(0, 0, 0.5, 0.5), SkillPopulation{}, NanRegret{}, {}, RsgConfig{}, rng), NumericError);
}

TEST_CASE("insert appends below capacity and evicts the argmin at capacity") {
  SkillPopulation p;
  p.capacity = 15;
  for (int k = 0; k < 15; ++k) {
    population_insert(p, gen(0, 0, 0.5, 0.5, k), 1.0 + k);
    CHECK(p.size() == static_cast<std::size_t>(k + 1));
  }
  p.members[3].regret_score = -5;
  population_insert(p, gen(0, 0, 0.5, 0.5, 15), 0.0);
  CHECK(p.size() == 15);
  for (const auto& m : p.members) CHECK(m.gen.stage != 3);
  CHECK((p.weights.array() == 1.0 / 15).all());
}

TEST_CASE("eviction tie goes to the oldest stage") {
  SkillPopulation p;
  p.capacity = 3;
  population_insert(p, gen(0, 0, 1, 1, 4), 0.5);
  population_insert(p, gen(0, 0, 1, 1, 2), 0.5);
  population_insert(p, gen(0, 0, 1, 1, 7), 0.9);
  CHECK(eviction_index(p) == 1);
}

TEST_CASE("recalibration: softmax arithmetic and floor") {
  // Component a gains ln 3 between the rounds; b sees the same best point
  // (its own mean) in both rounds and gains nothing.
  const Generator a = gen(0, 0, 1, 1), b = gen(3, 3, 0.01, 0.01);
  const SkillPopulation p = population({a, b});
  const Vector x = v2(std::sqrt(2 * std::log(3.0)), 0);
  const Vector w = recalibrate_weights(p, {v2(0, 0), b.mean}, {x, b.mean}, 0.0);
  CHECK(w(0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(w(1) == doctest::Approx(0.25).epsilon(1e-12));

  const SkillPopulation same = population({a, a});
  const Vector u = recalibrate_weights(same, {v2(0.1, 0.1)}, {x}, 0.01);
  CHECK(u(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(recalibrate_weights(p, {v2(0, 0)}, {}, 0.01) == Vector::Constant(2, 0.5));

  const Vector floored = recalibrate_weights(p, {v2(0, 0), b.mean}, {v2(3, 0), b.mean}, 0.01);
  CHECK(floored.minCoeff() >= 0.01 - 1e-15);
  CHECK(std::abs(floored.sum() - 1.0) < 1e-12);
}

TEST_CASE("floor keeps a simplex above p_min") {
  Vector w(3);
  w << 0.999, 0.0005, 0.0005;
  const Vector f = floor_weights(w, 0.01);
  CHECK(std::abs(f.sum() - 1.0) < 1e-12);
  CHECK(f.minCoeff() >= 0.01 - 1e-15);
  CHECK(f(1) == doctest::Approx(0.01));
  Vector two(2);
  two << 0.75, 0.25;
  CHECK(floor_weights(two, 0.01) == two);
}
