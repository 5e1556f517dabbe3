#include "doctest.h"

#include "rsd/maze.hpp"

using namespace rsd;

namespace {

MazeSpec open_arena() { return load_layout("open-8x8"); }

Vector2 vec(double x, double y) { return Vector2(x, y); }

}  // namespace

TEST_CASE("bundled layouts parse") {
  for (const auto& name : bundled_layout_names()) {
    const MazeSpec m = load_layout(name);
    CHECK(m.rows() > 2);
    CHECK_FALSE(m.is_wall(m.start.col, m.start.row));
  }
  CHECK(bundled_layout_names().size() == 3);
}

TEST_CASE("layout files on disk match the bundled copies") {
  for (const auto& name : bundled_layout_names()) {
    const MazeSpec file = load_layout(std::string(RSD_LAYOUT_DIR) + "/" + name + ".txt");
    CHECK(file.grid == load_layout(name).grid);
    CHECK(file.start == load_layout(name).start);
  }
}

TEST_CASE("bad layouts are rejected") {
  CHECK_THROWS_AS(parse_layout("###\n#.#\n###\n"), ConfigError);       // no start
  CHECK_THROWS_AS(parse_layout("####\n#S#\n####\n"), ConfigError);     // ragged
  CHECK_THROWS_AS(parse_layout("###\n#SS\n###\n"), ConfigError);       // two starts
  CHECK_THROWS_AS(parse_layout("###\n#Sx\n###\n"), ConfigError);       // unknown glyph
  CHECK_THROWS_AS(load_layout("/nonexistent/layout.txt"), ConfigError);
}

TEST_CASE("reset is the start-cell centre at rest") {
  const MazeSpec m = load_layout("umaze");
  REQUIRE(m.start == Cell{1, 1});
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    const EnvState s = reset(m, seed);
    CHECK(s.position == vec(1.5, 1.5));
    CHECK(s.velocity == Vector2::Zero());
    CHECK(s.t == 0);
  }
  Observation o;
  o << 1.5, 1.5, 0.0, 0.0;
  CHECK(observe(reset(m)) == o);
}

TEST_CASE("zero action from rest only advances time") {
  const MazeSpec m = open_arena();
  const EnvState s0 = reset(m);
  const EnvState s1 = step(m, s0, Vector2::Zero());
  CHECK(s1.position == s0.position);
  CHECK(s1.velocity == s0.velocity);
  CHECK(s1.t == 1);
}

TEST_CASE("one push without damping matches hand simulation") {
  MazeSpec m = load_layout("umaze");
  m.damping = 0.0;
  const EnvState s1 = step(m, reset(m), vec(1.0, 0.0));
  CHECK(s1.velocity.x() == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(s1.velocity.y() == 0.0);
  CHECK(s1.position.x() == doctest::Approx(1.51).epsilon(1e-15));
  CHECK(s1.position.y() == 1.5);
  const Observation o = observe(s1);
  CHECK(o(0) == doctest::Approx(1.51));
  CHECK(o(1) == 1.5);
  CHECK(o(2) == doctest::Approx(0.1));
  CHECK(o(3) == 0.0);
}

TEST_CASE("actions are clipped to the unit box") {
  const MazeSpec m = open_arena();
  const EnvState a = step(m, reset(m), vec(5.0, -7.0));
  const EnvState b = step(m, reset(m), vec(1.0, -1.0));
  CHECK(a.position == b.position);
  CHECK(a.velocity == b.velocity);
}

TEST_CASE("pushing into a wall pins the position at the margin") {
  const MazeSpec m = load_layout("umaze");
  EnvState s = reset(m);
  for (int t = 0; t < 100; ++t) s = step(m, s, vec(-1.0, 0.0));
  CHECK(s.position.x() == doctest::Approx(1.0 + kWallMargin).epsilon(1e-15));
  CHECK(s.velocity.x() == 0.0);
  CHECK(s.position.y() == 1.5);

  s = reset(m);
  for (int t = 0; t < 100; ++t) s = step(m, s, vec(0.0, -1.0));
  CHECK(s.position.y() == doctest::Approx(1.0 + kWallMargin).epsilon(1e-15));
  CHECK(s.velocity.y() == 0.0);
}

TEST_CASE("stepping past the horizon is a protocol error") {
  MazeSpec m = open_arena();
  m.horizon = 3;
  EnvState s = reset(m);
  for (int t = 0; t < 3; ++t) s = step(m, s, vec(0.3, 0.3));
  CHECK(s.t == 3);
  CHECK_THROWS_AS(step(m, s, vec(0.0, 0.0)), ProtocolError);
}

TEST_CASE("fuzz: determinism, containment and speed cap") {
  for (const auto& name : bundled_layout_names()) {
    MazeSpec m = load_layout(name);
    m.v_max = 0.15;  // low enough that the cap binds
    m.damping = 0.0;
    Rng rng(7);
    for (int ep = 0; ep < 20; ++ep) {
      EnvState s = reset(m);
      for (int t = 0; t < m.horizon; ++t) {
        const Vector2 a(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
        const EnvState n1 = step(m, s, a);
        const EnvState n2 = step(m, s, a);
        REQUIRE(n1.position == n2.position);
        REQUIRE(n1.velocity == n2.velocity);
        REQUIRE(m.is_free_position(n1.position));
        REQUIRE(n1.velocity.cwiseAbs().maxCoeff() <= m.v_max);
        s = n1;
      }
    }
  }
}

TEST_CASE("observation scaler maps the grid onto [-1, 1]") {
  const MazeSpec m = load_layout("large");
  const ObservationScaler sc = ObservationScaler::for_maze(m);
  Observation corner;
  corner << 0.0, 0.0, 0.5, -0.5;
  const Observation a = sc.apply(corner);
  CHECK(a(0) == -1.0);
  CHECK(a(1) == -1.0);
  CHECK(a(2) == 0.5);
  Observation far;
  far << m.cols() * m.cell_size, m.rows() * m.cell_size, 0.0, 0.0;
  CHECK(sc.apply(far)(0) == 1.0);
  CHECK(sc.apply(far)(1) == 1.0);
}

TEST_CASE("a 300-step episode can cross the open arena") {
  const MazeSpec m = open_arena();
  EnvState s = reset(m);
  for (int t = 0; t < 40; ++t) s = step(m, s, vec(1.0, 0.0));
  CHECK(s.position.x() > 7.0);
}
