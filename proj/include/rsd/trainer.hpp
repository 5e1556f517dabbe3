#pragma once

// Staged training loop: Part 1 trains the agent and phi under skills drawn from
// the population, Part 2 fits a new regret-seeking generator and updates the
// population.

#include <functional>
#include <string>
#include <vector>

#include "rsd/config.hpp"
#include "rsd/maze.hpp"
#include "rsd/metrics.hpp"
#include "rsd/replay.hpp"
#include "rsd/repr.hpp"
#include "rsd/sac.hpp"
#include "rsd/skillgen.hpp"

namespace rsd {

enum class Mode { kRsd, kUniformBaseline };
Mode parse_mode(const std::string& s);

struct Trajectory {
  std::vector<Observation> states;  // horizon + 1
  Matrix actions;                   // 2 x horizon
  Vector skill;
};

struct StageStats {
  int stage = 0;
  Scalar regret_mean = 0;
  Scalar pop_entropy = 0;  // NaN without a population
  Scalar rsg_objective = 0;
  bool part2_aborted = false;
  bool proximity_skipped = false;
  Scalar critic_loss = 0;
  Scalar phi_loss = 0;
  Scalar constraint = 0;
  Scalar lambda = 0;
  Scalar alpha = 0;
  std::size_t sac_updates = 0;
};

struct World {
  RunConfig cfg{};
  Mode mode = Mode::kRsd;
  MazeSpec maze{};
  Observation s0{};

  AgentParams agent{};
  AgentOptimizers agent_opt{};
  ReprState repr{};
  Adam repr_opt{};

  SkillPopulation population{};
  SnapshotPtr snapshot{};

  ReplayBuffer replay;
  StageReprBuffer stage_buffer{};     // B_k of the running stage
  StageReprBuffer archived_buffer{};  // B_{k-1}
  std::vector<Vector> finals_new{};   // phi(s_f) of the latest collection round
  std::vector<Vector> finals_old{};   // and of the round before

  Rng rng;
  int stage = 0;  // next stage to run
  std::int64_t env_steps = 0;
  std::vector<StageStats> history{};

  Index skill_dim() const { return cfg.option_dim; }
};

MazeSpec maze_from_config(const RunConfig& cfg);
World make_world(const RunConfig& cfg);

// Skills for Part 1: population draws (uniform box while empty) or unit
// skills for the baseline.
Vector draw_training_skill(World& w);

// Runs one episode per skill column with stochastic actions, in lockstep.
// When `stage_buffer` is given, phi(s_t) every `stride` steps and the flagged
// final phi(s_T) are appended.
std::vector<Trajectory> collect(const MazeSpec& maze, const ActorCritic& agent, const ReprState& repr,
                                const Matrix& skills, int stride, StageReprBuffer* stage_buffer, Rng& rng);

// Rewards for a batch from the current encoder, in units of the per-step
// budget and multiplied by reward_scale.
Vector relabel_rewards(const World& w, const TransitionBatch& batch);

// Part 1 inner update: phi step, dual step, SAC step on one shared batch.
void train_step(World& w, StageStats& stats);

// Regret of `skills` between the live agent and the snapshot.
Vector stage_regrets(const World& w, const Matrix& skills, std::uint64_t seed);

using StageHook = std::function<void(const char* event, const World&)>;

// Runs stage w.stage and advances the counter.
StageStats run_stage(World& w, const StageHook& hook = {});

// Deterministic evaluation view of the trained agent and encoder.
GoalConditionedAgent evaluation_agent(const World& w);

// Skills swept for coverage: thorough set for rsd, evenly spaced unit skills
// (grid_res^2 + draws * population_max of them) for the baseline.
Matrix coverage_skills(const World& w, Rng& rng);

EvalReport evaluate(const World& w, const MazeSpec& maze, bool coverage, bool zero_shot_eval, GoalMode goal_mode);

}  // namespace rsd
