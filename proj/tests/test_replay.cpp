#include "doctest.h"

#include <filesystem>

#include "rsd/replay.hpp"

using namespace rsd;

namespace {

Observation obs_of(double k) {
  Observation o;
  o << k, k + 0.5, -k, 0.25;
  return o;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("ring buffer keeps the newest records in FIFO order") {
  ReplayBuffer rb(5, 2);
  for (int k = 0; k < 12; ++k) {
    rb.push(obs_of(k), vec2(k, -k), obs_of(k + 1), vec2(0.1 * k, 0.2), k == 0);
    REQUIRE(rb.size() <= rb.capacity());
  }
  CHECK(rb.size() == 5);
  CHECK(rb.pushed() == 12);
  const TransitionBatch b = rb.gather({0, 1, 2, 3, 4});
  for (Index j = 0; j < 5; ++j) {
    CHECK(b.obs(0, j) == 7 + j);
    CHECK(b.next_obs(0, j) == 8 + j);
    CHECK(b.actions(1, j) == -(7 + j));
    CHECK(b.skills(0, j) == doctest::Approx(0.1 * (7 + j)));
    CHECK_FALSE(b.initial[j]);
  }
  CHECK_THROWS_AS(rb.gather({5}), ConfigError);
}

TEST_CASE("initial flags and skills survive sampling") {
  ReplayBuffer rb(100, 2);
  for (int k = 0; k < 40; ++k) rb.push(obs_of(k), vec2(0, 0), obs_of(k + 1), vec2(k % 7, 1), k % 10 == 0);
  Rng rng(1);
  const TransitionBatch b = rb.sample(256, rng);
  CHECK(b.size() == 256);
  for (Index j = 0; j < b.size(); ++j) {
    const int k = static_cast<int>(b.obs(0, j));
    CHECK(b.initial[j] == (k % 10 == 0));
    CHECK(b.skills(0, j) == k % 7);
  }
}

TEST_CASE("binary round trip is exact") {
  ReplayBuffer rb(7, 2);
  Rng rng(3);
  for (int k = 0; k < 10; ++k)
    rb.push(obs_of(rng.normal()), rng.normal_matrix(2, 1).col(0), obs_of(rng.normal()), rng.normal_matrix(2, 1).col(0),
            k == 2);
  const auto path = (std::filesystem::temp_directory_path() / "rsd_replay_test.bin").string();
  rb.save(path);
  const ReplayBuffer back = ReplayBuffer::load(path);
  CHECK(back == rb);
  std::filesystem::remove(path);
}

TEST_CASE("malformed input is rejected") {
  CHECK_THROWS_AS(ReplayBuffer(0, 2), ConfigError);
  ReplayBuffer rb(3, 2);
  CHECK_THROWS_AS(rb.push(obs_of(0), vec2(0, 0), obs_of(1), Vector::Zero(3), false), ConfigError);
  Rng rng(1);
  CHECK_THROWS_AS(rb.sample(4, rng), ConfigError);
  CHECK_THROWS_AS(ReplayBuffer::load("/nonexistent/replay.bin"), ConfigError);
}

TEST_CASE("stage buffer lists flagged finals") {
  StageReprBuffer b;
  b.add(vec2(0, 0), false);
  b.add(vec2(1, 1), true);
  b.add(vec2(2, 2), false);
  b.add(vec2(3, 3), true);
  const auto f = b.finals();
  REQUIRE(f.size() == 2);
  CHECK(f[0](0) == 1);
  CHECK(f[1](0) == 3);
  b.clear();
  CHECK(b.size() == 0);
}
