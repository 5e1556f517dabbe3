#include "rsd/maze.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace rsd {
namespace {

const std::map<std::string, std::string>& bundled_layouts() {
  static const std::map<std::string, std::string> layouts = {
      {"open-8x8",
       "##########\n"
       "#........#\n"
       "#........#\n"
       "#........#\n"
       "#...S....#\n"
       "#........#\n"
       "#........#\n"
       "#........#\n"
       "#........#\n"
       "##########\n"},
      {"umaze",
       "##########\n"
       "#S.......#\n"
       "#........#\n"
       "#######..#\n"
       "#######..#\n"
       "#........#\n"
       "#........#\n"
       "##########\n"},
      // Same corridor topology as the D4RL large maze.
      {"large",
       "############\n"
       "#S...#.....#\n"
       "#.##.#.#.#.#\n"
       "#......#...#\n"
       "#.####.###.#\n"
       "#..#.#.....#\n"
       "##.#.#.#.###\n"
       "#..#...#...#\n"
       "############\n"},
  };
  return layouts;
}

}  // namespace

bool MazeSpec::is_wall(int col, int row) const {
  if (row < 0 || row >= rows() || col < 0 || col >= cols()) return true;
  return grid[row][col] == '#';
}

Cell MazeSpec::cell_of(const Vector2& p) const {
  return {static_cast<int>(std::floor(p.x() / cell_size)), static_cast<int>(std::floor(p.y() / cell_size))};
}

bool MazeSpec::is_free_position(const Vector2& p) const {
  const Cell c = cell_of(p);
  return !is_wall(c.col, c.row);
}

Vector2 MazeSpec::cell_center(const Cell& c) const {
  return Vector2((c.col + 0.5) * cell_size, (c.row + 0.5) * cell_size);
}

std::vector<Cell> MazeSpec::free_cells() const {
  std::vector<Cell> cells;
  for (int r = 0; r < rows(); ++r)
    for (int c = 0; c < cols(); ++c)
      if (!is_wall(c, r)) cells.push_back({c, r});
  return cells;
}

void MazeSpec::validate() const {
  if (grid.empty()) throw ConfigError("layout '" + name + "' is empty");
  for (const auto& line : grid)
    if (static_cast<int>(line.size()) != cols()) throw ConfigError("layout '" + name + "' is not rectangular");
  if (is_wall(start.col, start.row)) throw ConfigError("layout '" + name + "': start cell is not free");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (!(cell_size > 0) || !(dt > 0) || !(v_max > 0) || !(action_scale > 0))
    throw ConfigError("cell_size, dt, v_max and action_scale must be positive");
  if (damping < 0 || damping >= 1) throw ConfigError("damping must be in [0, 1)");
}

MazeSpec parse_layout(const std::string& text, const std::string& name) {
  MazeSpec spec;
  spec.name = name;
  std::istringstream in(text);
  std::string line;
  bool found_start = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    for (std::size_t c = 0; c < line.size(); ++c) {
      const char ch = line[c];
      if (ch != '#' && ch != '.' && ch != 'S')
        throw ConfigError("layout '" + name + "': unexpected character '" + std::string(1, ch) + "'");
      if (ch == 'S') {
        if (found_start) throw ConfigError("layout '" + name + "': more than one start cell");
        spec.start = {static_cast<int>(c), static_cast<int>(spec.grid.size())};
        found_start = true;
      }
    }
    spec.grid.push_back(line);
  }
  if (!found_start) throw ConfigError("layout '" + name + "': no start cell 'S'");
  spec.validate();
  return spec;
}

const std::vector<std::string>& bundled_layout_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [k, v] : bundled_layouts()) n.push_back(k);
    return n;
  }();
  return names;
}

MazeSpec load_layout(const std::string& name_or_path) {
  const auto& bundled = bundled_layouts();
  if (auto it = bundled.find(name_or_path); it != bundled.end()) return parse_layout(it->second, it->first);
  std::ifstream in(name_or_path);
  if (!in) throw ConfigError("unknown layout '" + name_or_path + "' (not bundled and not a readable file)");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_layout(buf.str(), name_or_path);
}

EnvState reset(const MazeSpec& spec, std::uint64_t /*seed*/) {
  EnvState s;
  s.position = spec.cell_center(spec.start);
  return s;
}

EnvState step(const MazeSpec& spec, const EnvState& state, const Vector2& action) {
  if (state.t >= spec.horizon)
    throw ProtocolError("step called on a terminated episode (t=" + std::to_string(state.t) + ")");
  const Vector2 a = action.cwiseMax(-1.0).cwiseMin(1.0);
  EnvState next = state;
  next.velocity = ((1.0 - spec.damping) * state.velocity + spec.action_scale * spec.dt * a)
                      .cwiseMax(-spec.v_max)
                      .cwiseMin(spec.v_max);

  // Axis by axis: x first, then y from the updated x.
  for (int axis = 0; axis < 2; ++axis) {
    const Scalar moved = next.position[axis] + next.velocity[axis] * spec.dt;
    Vector2 candidate = next.position;
    candidate[axis] = moved;
    const Cell c = spec.cell_of(candidate);
    if (spec.is_wall(c.col, c.row)) {
      const int wall_index = axis == 0 ? c.col : c.row;
      next.position[axis] = next.velocity[axis] > 0 ? wall_index * spec.cell_size - kWallMargin
                                                    : (wall_index + 1) * spec.cell_size + kWallMargin;
      next.velocity[axis] = 0.0;
    } else {
      next.position[axis] = moved;
    }
  }
  next.t = state.t + 1;
  return next;
}

ObservationScaler ObservationScaler::for_maze(const MazeSpec& spec) {
  ObservationScaler s;
  const Scalar hx = 0.5 * spec.cols() * spec.cell_size;
  const Scalar hy = 0.5 * spec.rows() * spec.cell_size;
  s.offset << hx, hy, 0.0, 0.0;
  s.scale << hx, hy, 1.0, 1.0;
  return s;
}

Matrix ObservationScaler::apply(const Matrix& batch) const {
  return (batch.colwise() - offset).array().colwise() / scale.array();
}

}  // namespace rsd
