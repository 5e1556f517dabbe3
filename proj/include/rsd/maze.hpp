#pragma once

// Deterministic point-mass mazes. Positions are in length units with the
// origin at the top-left corner of the grid; x grows with the column index and
// y with the row index.

#include <Eigen/Core>

#include <string>
#include <vector>

#include "rsd/common.hpp"

namespace rsd {

using Observation = Eigen::Matrix<Scalar, 4, 1>;

struct Cell {
  int col = 0;
  int row = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct MazeSpec {
  std::string name;
  std::vector<std::string> grid;  // '#' wall, anything else free
  Scalar cell_size = 1.0;
  Cell start;
  Scalar dt = 0.1;
  Scalar damping = 0.1;
  Scalar action_scale = 1.0;
  Scalar v_max = 2.0;
  int horizon = 300;

  int rows() const { return static_cast<int>(grid.size()); }
  int cols() const { return grid.empty() ? 0 : static_cast<int>(grid.front().size()); }
  bool is_wall(int col, int row) const;
  bool is_free_position(const Vector2& p) const;
  Cell cell_of(const Vector2& p) const;
  Vector2 cell_center(const Cell& c) const;
  std::vector<Cell> free_cells() const;

  // Throws ConfigError when the layout or the physics constants are invalid.
  void validate() const;
};

struct EnvState {
  Vector2 position = Vector2::Zero();
  Vector2 velocity = Vector2::Zero();
  int t = 0;
};

inline constexpr Scalar kWallMargin = 1e-3;

// Parses an ASCII layout ('#' wall, '.' free, 'S' start).
MazeSpec parse_layout(const std::string& text, const std::string& name = "custom");

// Bundled layout by name (open-8x8, umaze, large) or a layout file path.
MazeSpec load_layout(const std::string& name_or_path);

const std::vector<std::string>& bundled_layout_names();

EnvState reset(const MazeSpec& spec, std::uint64_t seed = 0);

EnvState step(const MazeSpec& spec, const EnvState& state, const Vector2& action);

inline Observation observe(const EnvState& s) {
  Observation o;
  o << s.position, s.velocity;
  return o;
}

// Fixed affine map from raw observations to network inputs, centred on the
// grid. Not learned.
struct ObservationScaler {
  Observation offset = Observation::Zero();
  Observation scale = Observation::Ones();

  static ObservationScaler for_maze(const MazeSpec& spec);
  Observation apply(const Observation& o) const { return (o - offset).cwiseQuotient(scale); }
  Matrix apply(const Matrix& batch) const;
};

}  // namespace rsd
