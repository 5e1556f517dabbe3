#pragma once

// Coverage, zero-shot goal reaching and metric persistence.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "rsd/common.hpp"
#include "rsd/maze.hpp"
#include "rsd/skillgen.hpp"

namespace rsd {

using PositionTrace = std::vector<Vector2>;

// Distinct floor(position / cell_size) cells over every state of every trace.
std::size_t cover_coords(const std::vector<PositionTrace>& traces, Scalar cell_size);

// grid_res x grid_res lattice over [-1, 1]^2 followed by `draws_per_member`
// clipped draws from each population member.
Matrix thorough_skill_set(const SkillPopulation& pop, Index grid_res, int draws_per_member, Rng& rng);

// Batched deterministic agent and encoder, as seen by the evaluators.
struct GoalConditionedAgent {
  std::function<Matrix(const Matrix& obs, const Matrix& skills)> act;  // 2 x B
  std::function<Matrix(const Matrix& obs)> encode;                     // d x B
};

// Deterministic episodes for every skill column, run in lockstep. Each trace
// holds horizon + 1 positions.
std::vector<PositionTrace> rollout_positions(const MazeSpec& maze, const GoalConditionedAgent& agent,
                                             const Matrix& skills);

enum class GoalMode { kRsd, kMetraFixed, kMetraDynamic };
GoalMode parse_goal_mode(const std::string& s);
std::string goal_mode_name(GoalMode m);

// Centres of free cells at Chebyshev distance >= min_distance from the start.
std::vector<Vector2> zero_shot_goals(const MazeSpec& maze, int min_distance = 2);

struct GoalResult {
  Vector2 goal;
  Scalar final_distance = 0;
  bool success = false;
};

struct ZeroShotReport {
  std::vector<GoalResult> goals;
  Scalar ar = 0;       // mean success
  Scalar fd_mean = 0;  // mean final distance
};

// One deterministic episode per goal. Throws ConfigError for a goal inside a
// wall.
ZeroShotReport zero_shot(const MazeSpec& maze, const GoalConditionedAgent& agent, const std::vector<Vector2>& goals,
                         GoalMode mode, Scalar radius);

struct EvalReport {
  int stage = 0;
  std::int64_t env_steps = 0;
  std::size_t cover_coords = 0;
  std::size_t skill_count = 0;
  std::optional<ZeroShotReport> zero_shot;
  std::string goal_mode;
  Scalar regret_mean = 0;
  Scalar pop_entropy = 0;
};

nlohmann::json to_json(const EvalReport& r);

struct MetricsRow {
  int stage = 0;
  std::int64_t env_steps = 0;
  std::size_t cover_coords = 0;
  Scalar regret_mean = 0;
  Scalar pop_entropy = 0;
  Scalar ar = 0;
  Scalar fd_mean = 0;
  Scalar wall_clock_s = 0;
};

inline constexpr const char* kMetricsHeader =
    "stage,env_steps,cover_coords,regret_mean,pop_entropy,ar,fd_mean,wall_clock_s";

// Appends one row, writing the header first when the file is new or empty.
void write_metrics(const MetricsRow& row, const std::string& path);
std::vector<MetricsRow> read_metrics(const std::string& path);
// Keeps only rows with stage < `next_stage` (used when resuming).
void truncate_metrics(const std::string& path, int next_stage);

}  // namespace rsd
