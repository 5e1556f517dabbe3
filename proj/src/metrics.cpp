#include "rsd/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace rsd {

std::size_t cover_coords(const std::vector<PositionTrace>& traces, Scalar cell_size) {
  if (!(cell_size > 0)) throw ConfigError("cover_coords: cell_size must be positive");
  std::set<std::pair<long, long>> cells;
  for (const auto& trace : traces)
    for (const auto& p : trace)
      cells.emplace(static_cast<long>(std::floor(p.x() / cell_size)), static_cast<long>(std::floor(p.y() / cell_size)));
  return cells.size();
}

Matrix thorough_skill_set(const SkillPopulation& pop, Index grid_res, int draws_per_member, Rng& rng) {
  if (grid_res < 2) throw ConfigError("thorough_skill_set: grid_res must be >= 2");
  const Index d = pop.empty() ? 2 : pop.members.front().gen.dim();
  Index lattice = 1;
  for (Index i = 0; i < d; ++i) lattice *= grid_res;
  const Index extra = static_cast<Index>(pop.size()) * draws_per_member;
  Matrix z(d, lattice + extra);
  for (Index k = 0; k < lattice; ++k) {
    Index rest = k;
    for (Index i = 0; i < d; ++i) {
      z(i, k) = -1.0 + 2.0 * static_cast<Scalar>(rest % grid_res) / static_cast<Scalar>(grid_res - 1);
      rest /= grid_res;
    }
  }
  Index col = lattice;
  for (const auto& m : pop.members) {
    const Vector s = m.gen.std_dev();
    for (int k = 0; k < draws_per_member; ++k, ++col)
      for (Index i = 0; i < d; ++i) z(i, col) = std::clamp(m.gen.mean(i) + s(i) * rng.normal(), -1.0, 1.0);
  }
  return z;
}

std::vector<PositionTrace> rollout_positions(const MazeSpec& maze, const GoalConditionedAgent& agent,
                                             const Matrix& skills) {
  const Index n = skills.cols();
  std::vector<EnvState> states(n, reset(maze));
  std::vector<PositionTrace> traces(n);
  for (Index k = 0; k < n; ++k) traces[k].push_back(states[k].position);
  Matrix obs(4, n);
  for (int t = 0; t < maze.horizon; ++t) {
    for (Index k = 0; k < n; ++k) obs.col(k) = observe(states[k]);
    const Matrix a = agent.act(obs, skills);
    for (Index k = 0; k < n; ++k) {
      states[k] = step(maze, states[k], a.col(k));
      traces[k].push_back(states[k].position);
    }
  }
  return traces;
}

GoalMode parse_goal_mode(const std::string& s) {
  if (s == "rsd") return GoalMode::kRsd;
  if (s == "metra-f") return GoalMode::kMetraFixed;
  if (s == "metra-d") return GoalMode::kMetraDynamic;
  throw ConfigError("unknown goal mode '" + s + "' (rsd | metra-f | metra-d)");
}

std::string goal_mode_name(GoalMode m) {
  switch (m) {
    case GoalMode::kRsd: return "rsd";
    case GoalMode::kMetraFixed: return "metra-f";
    default: return "metra-d";
  }
}

std::vector<Vector2> zero_shot_goals(const MazeSpec& maze, int min_distance) {
  std::vector<Vector2> goals;
  for (const Cell& c : maze.free_cells()) {
    const int cheb = std::max(std::abs(c.col - maze.start.col), std::abs(c.row - maze.start.row));
    if (cheb >= min_distance) goals.push_back(maze.cell_center(c));
  }
  return goals;
}

namespace {

Observation goal_observation(const Vector2& g) {
  Observation o;
  o << g, 0.0, 0.0;
  return o;
}

Vector unit_or(const Vector& v, const Vector& fallback) {
  const Scalar n = v.norm();
  return n > 1e-12 ? Vector(v / n) : fallback;
}

}  // namespace

ZeroShotReport zero_shot(const MazeSpec& maze, const GoalConditionedAgent& agent, const std::vector<Vector2>& goals,
                         GoalMode mode, Scalar radius) {
  ZeroShotReport report;
  const Index n = static_cast<Index>(goals.size());
  if (n == 0) return report;
  Matrix goal_obs(4, n);
  for (Index k = 0; k < n; ++k) {
    if (!maze.is_free_position(goals[k]))
      throw ConfigError("zero_shot: goal (" + std::to_string(goals[k].x()) + ", " + std::to_string(goals[k].y()) +
                        ") lies inside a wall");
    goal_obs.col(k) = goal_observation(goals[k]);
  }
  const Matrix phi_goal = agent.encode(goal_obs);
  std::vector<EnvState> states(n, reset(maze));
  Matrix obs(4, n);
  for (Index k = 0; k < n; ++k) obs.col(k) = observe(states[k]);
  const Matrix phi_start = agent.encode(obs);

  Matrix skills = phi_goal;
  if (mode != GoalMode::kRsd)
    for (Index k = 0; k < n; ++k)
      skills.col(k) = unit_or(phi_goal.col(k) - phi_start.col(k), Vector::Zero(phi_goal.rows()));

  std::vector<bool> success(n, false);
  auto check = [&] {
    for (Index k = 0; k < n; ++k)
      if ((states[k].position - goals[k]).norm() < radius) success[k] = true;
  };
  check();
  for (int t = 0; t < maze.horizon; ++t) {
    for (Index k = 0; k < n; ++k) obs.col(k) = observe(states[k]);
    if (mode == GoalMode::kMetraDynamic && t > 0) {
      const Matrix phi_now = agent.encode(obs);
      for (Index k = 0; k < n; ++k) skills.col(k) = unit_or(phi_goal.col(k) - phi_now.col(k), skills.col(k));
    }
    const Matrix a = agent.act(obs, skills);
    for (Index k = 0; k < n; ++k) states[k] = step(maze, states[k], a.col(k));
    check();
  }
  Scalar ok = 0, fd = 0;
  for (Index k = 0; k < n; ++k) {
    GoalResult r{goals[k], (states[k].position - goals[k]).norm(), success[k]};
    ok += r.success ? 1.0 : 0.0;
    fd += r.final_distance;
    report.goals.push_back(r);
  }
  report.ar = ok / n;
  report.fd_mean = fd / n;
  return report;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["stage"] = r.stage;
  j["env_steps"] = r.env_steps;
  j["cover_coords"] = r.cover_coords;
  j["skill_count"] = r.skill_count;
  j["regret_mean"] = r.regret_mean;
  j["pop_entropy"] = std::isfinite(r.pop_entropy) ? nlohmann::json(r.pop_entropy) : nlohmann::json(nullptr);
  if (r.zero_shot) {
    j["goal_mode"] = r.goal_mode;
    j["ar"] = r.zero_shot->ar;
    j["fd_mean"] = r.zero_shot->fd_mean;
    auto& goals = j["goals"] = nlohmann::json::array();
    for (const auto& g : r.zero_shot->goals)
      goals.push_back({{"x", g.goal.x()}, {"y", g.goal.y()}, {"fd", g.final_distance}, {"success", g.success}});
  }
  return j;
}

namespace {

std::string format_row(const MetricsRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%d,%lld,%zu,%.17g,%.17g,%.17g,%.17g,%.6f", r.stage,
                static_cast<long long>(r.env_steps), r.cover_coords, r.regret_mean, r.pop_entropy, r.ar, r.fd_mean,
                r.wall_clock_s);
  return buf;
}

}  // namespace

void write_metrics(const MetricsRow& row, const std::string& path) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw ConfigError("cannot append to metrics file '" + path + "'");
  if (fresh) out << kMetricsHeader << '\n';
  out << format_row(row) << '\n';
  if (!out) throw ConfigError("failed writing metrics file '" + path + "'");
}

std::vector<MetricsRow> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read metrics file '" + path + "'");
  std::vector<MetricsRow> rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  if (line != kMetricsHeader) throw ConfigError("metrics file '" + path + "' has an unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw ConfigError("metrics file '" + path + "': malformed row '" + line + "'");
    MetricsRow r;
    r.stage = std::stoi(f[0]);
    r.env_steps = std::stoll(f[1]);
    r.cover_coords = std::stoull(f[2]);
    r.regret_mean = std::stod(f[3]);
    r.pop_entropy = std::stod(f[4]);
    r.ar = std::stod(f[5]);
    r.fd_mean = std::stod(f[6]);
    r.wall_clock_s = std::stod(f[7]);
    rows.push_back(r);
  }
  return rows;
}

void truncate_metrics(const std::string& path, int next_stage) {
  if (!std::filesystem::exists(path)) return;
  const auto rows = read_metrics(path);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << kMetricsHeader << '\n';
    for (const auto& r : rows)
      if (r.stage < next_stage) out << format_row(r) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace rsd
