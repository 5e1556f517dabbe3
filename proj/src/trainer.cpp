#include "rsd/trainer.hpp"

#include <cmath>
#include <iostream>
#include <limits>

#include "rsd/baseline.hpp"

namespace rsd {

Mode parse_mode(const std::string& s) {
  if (s == "rsd") return Mode::kRsd;
  if (s == "uniform-baseline") return Mode::kUniformBaseline;
  throw ConfigError("unknown mode '" + s + "'");
}

MazeSpec maze_from_config(const RunConfig& cfg) {
  MazeSpec m = load_layout(cfg.env);
  m.cell_size = cfg.cell_size;
  m.dt = cfg.dt;
  m.damping = cfg.damping;
  m.action_scale = cfg.action_scale;
  m.v_max = cfg.v_max;
  m.horizon = static_cast<int>(cfg.max_path_length);
  m.validate();
  return m;
}

World make_world(const RunConfig& cfg) {
  validate(cfg);
  World w{.cfg = cfg,
          .mode = parse_mode(cfg.mode),
          .maze = maze_from_config(cfg),
          .replay = ReplayBuffer(static_cast<std::size_t>(cfg.replay_capacity), cfg.option_dim),
          .rng = Rng(static_cast<std::uint64_t>(cfg.seed))};
  w.s0 = observe(reset(w.maze));
  const auto scaler = ObservationScaler::for_maze(w.maze);
  const Index width = cfg.model_dim;
  const int layers = static_cast<int>(cfg.model_layers);
  w.repr = make_repr(cfg.option_dim, width, layers, scaler, static_cast<int>(cfg.max_path_length), cfg.dual_slack,
                     cfg.lambda_init, w.rng, w.mode == Mode::kRsd);
  w.repr_opt = Adam(w.repr.encoder.parameter_count(), cfg.lr_phi);
  w.agent = make_agent(cfg.option_dim, width, layers, scaler, cfg.gamma, cfg.tau, cfg.alpha_init, w.rng);
  w.agent.target_entropy = cfg.target_entropy;
  w.agent_opt = make_optimizers(w.agent, cfg.lr_common, cfg.lr_alpha);
  w.population.capacity = static_cast<std::size_t>(cfg.population_max);
  return w;
}

Vector draw_training_skill(World& w) {
  if (w.mode == Mode::kUniformBaseline) return uniform_unit_skill(w.skill_dim(), w.rng);
  return sample_skill(w.population, w.skill_dim(), w.rng);
}

std::vector<Trajectory> collect(const MazeSpec& maze, const ActorCritic& agent, const ReprState& repr,
                                const Matrix& skills, int stride, StageReprBuffer* stage_buffer, Rng& rng) {
  const Index n = skills.cols();
  const int T = maze.horizon;
  std::vector<EnvState> states(n, reset(maze));
  std::vector<Trajectory> trajs(n);
  for (Index k = 0; k < n; ++k) {
    trajs[k].skill = skills.col(k);
    trajs[k].actions.resize(kActionDim, T);
    trajs[k].states.push_back(observe(states[k]));
  }
  Matrix obs(4, n);
  for (int t = 0; t < T; ++t) {
    for (Index k = 0; k < n; ++k) obs.col(k) = observe(states[k]);
    if (stage_buffer && t % stride == 0) {
      const Matrix u = encode(repr, obs);
      for (Index k = 0; k < n; ++k) stage_buffer->add(u.col(k), false);
    }
    const Matrix a = act_stochastic(agent, obs, skills, rng.normal_matrix(kActionDim, n));
    for (Index k = 0; k < n; ++k) {
      states[k] = step(maze, states[k], a.col(k));
      trajs[k].actions.col(t) = a.col(k);
      trajs[k].states.push_back(observe(states[k]));
    }
  }
  if (stage_buffer) {
    for (Index k = 0; k < n; ++k) obs.col(k) = trajs[k].states.back();
    const Matrix u = encode(repr, obs);
    for (Index k = 0; k < n; ++k) stage_buffer->add(u.col(k), true);
  }
  return trajs;
}

Vector relabel_rewards(const World& w, const TransitionBatch& batch) {
  const Matrix u = encode(w.repr, batch.obs);
  const Matrix v = encode(w.repr, batch.next_obs);
  // Rewards are expressed in units of the per-step distance budget: 1/T for
  // the bounded representation, 1 for the baseline.
  if (w.mode == Mode::kRsd)
    return (w.cfg.reward_scale / w.repr.step_budget()) * intrinsic_rewards(u, v, batch.skills);
  return w.cfg.reward_scale * metra_rewards(u, v, batch.skills);
}

void train_step(World& w, StageStats& stats) {
  TransitionBatch batch = w.replay.sample(w.cfg.batch_size, w.rng);
  batch.rewards = relabel_rewards(w, batch);

  Net grads = w.repr.encoder.zeros_like();
  const ReprObjective obj = w.mode == Mode::kRsd ? repr_objective(w.repr, batch, w.cfg.centering_weight, &grads)
                                                 : metra_repr_objective(w.repr, batch, &grads);
  if (!obj.skipped) {
    nn::adam_step(w.repr.encoder, grads, w.repr_opt);
    w.repr.lambda = dual_update(w.repr.lambda, obj.constraint, w.cfg.lr_lambda);
  }
  const SacStats sac = sac_update(w.agent, w.agent_opt, batch, w.rng);
  ++stats.sac_updates;
  const Scalar k = static_cast<Scalar>(stats.sac_updates);
  stats.critic_loss += (sac.critic_loss - stats.critic_loss) / k;
  stats.phi_loss += (obj.phi_loss - stats.phi_loss) / k;
  stats.constraint += (obj.constraint - stats.constraint) / k;
}

Vector stage_regrets(const World& w, const Matrix& skills, std::uint64_t seed) {
  return regret(w.agent.online, w.snapshot.get(), w.s0, skills, static_cast<int>(w.cfg.value_samples), seed).values;
}

namespace {

// Mean regret of clipped draws from one generator.
Scalar member_score(const World& w, const Generator& g, Rng& rng) {
  if (!w.snapshot) return 0.0;
  const int n = static_cast<int>(w.cfg.regret_score_draws);
  Matrix z(g.dim(), n);
  const Vector s = g.std_dev();
  for (int k = 0; k < n; ++k)
    for (Index i = 0; i < g.dim(); ++i) z(i, k) = std::clamp(g.mean(i) + s(i) * rng.normal(), -1.0, 1.0);
  return stage_regrets(w, z, rng.next()).mean();
}

void part_one(World& w, StageStats& stats, const StageHook& hook) {
  const Index n_traj = w.cfg.trajectory_batch_size;
  for (std::int64_t round = 0; round < w.cfg.steps_per_stage; ++round) {
    if (w.mode == Mode::kRsd && !w.population.empty())
      w.population.weights = recalibrate_weights(w.population, w.finals_new, w.finals_old, w.cfg.p_min);
    Matrix skills(w.skill_dim(), n_traj);
    for (Index k = 0; k < n_traj; ++k) skills.col(k) = draw_training_skill(w);

    const std::size_t before = w.stage_buffer.size();
    const auto trajs = collect(w.maze, w.agent.online, w.repr, skills, static_cast<int>(w.cfg.repr_stride),
                               &w.stage_buffer, w.rng);
    for (const auto& tr : trajs) {
      for (std::size_t t = 0; t + 1 < tr.states.size(); ++t)
        w.replay.push(tr.states[t], tr.actions.col(static_cast<Index>(t)), tr.states[t + 1], tr.skill, t == 0);
      w.env_steps += static_cast<std::int64_t>(tr.states.size() - 1);
    }
    w.finals_old = std::move(w.finals_new);
    w.finals_new.clear();
    for (std::size_t i = before; i < w.stage_buffer.size(); ++i)
      if (w.stage_buffer.final_flags[i]) w.finals_new.push_back(w.stage_buffer.states[i]);

    for (std::int64_t j = 0; j < w.cfg.agent_policy_training_steps; ++j) train_step(w, stats);
  }
  stats.lambda = w.repr.lambda;
  stats.alpha = w.agent.online.alpha();
  if (hook) hook("part1-done", w);
}

void part_two(World& w, StageStats& stats, const StageHook& hook) {
  const Index d = w.skill_dim();
  const int draws = static_cast<int>(w.cfg.regret_metric_draws);

  // Stage regret over the current skill distribution, before the population
  // changes.
  if (w.snapshot) {
    Matrix z(d, draws);
    for (int k = 0; k < draws; ++k) z.col(k) = draw_training_skill(w);
    stats.regret_mean = stage_regrets(w, z, w.rng.next()).mean();
  }

  if (w.mode == Mode::kRsd) {
    if (hook) hook("part2-begin", w);
    RsgConfig rc;
    rc.alpha1 = w.cfg.alpha1;
    rc.alpha2 = w.cfg.alpha2;
    rc.steps = static_cast<int>(w.cfg.rsg_training_steps);
    rc.skill_batch = static_cast<int>(w.cfg.rsg_skill_batch);
    rc.kl_samples = static_cast<int>(w.cfg.kl_samples);
    rc.lr = w.cfg.lr_generator;
    rc.std_floor = w.cfg.generator_std_floor;
    rc.score_function = w.cfg.score_function_gradient;
    const Generator init = Generator::make(Vector::Zero(d), Vector::Constant(d, 0.5), w.stage);

    ZeroRegret zero;
    AgentRegret live(w.agent.online, w.snapshot, w.s0, static_cast<int>(w.cfg.value_samples));
    const RegretField& field = w.snapshot ? static_cast<const RegretField&>(live) : zero;
    try {
      const RsgResult res = rsg_update(init, w.population, field, w.stage_buffer.states, rc, w.rng);
      stats.rsg_objective = res.final_objective;
      stats.proximity_skipped = res.proximity_skipped;
      if (res.proximity_skipped) std::cerr << "stage " << w.stage << ": empty stage buffer, proximity term omitted\n";
      for (auto& m : w.population.members) m.regret_score = member_score(w, m.gen, w.rng);
      const Scalar score = member_score(w, res.gen, w.rng);
      population_insert(w.population, res.gen, score);
    } catch (const NumericError& e) {
      stats.part2_aborted = true;
      std::cerr << "stage " << w.stage << ": generator update aborted (" << e.what() << "), population unchanged\n";
    }
    Rng entropy_rng(static_cast<std::uint64_t>(w.cfg.seed) * 7919u + static_cast<std::uint64_t>(w.stage));
    stats.pop_entropy = population_entropy(w.population, static_cast<int>(w.cfg.entropy_samples), entropy_rng);
  } else {
    stats.pop_entropy = std::numeric_limits<Scalar>::quiet_NaN();
  }

  w.snapshot = make_snapshot(w.agent.online, w.stage);
  w.archived_buffer = std::move(w.stage_buffer);
  w.stage_buffer.clear();
}

}  // namespace

StageStats run_stage(World& w, const StageHook& hook) {
  StageStats stats;
  stats.stage = w.stage;
  part_one(w, stats, hook);
  part_two(w, stats, hook);
  w.history.push_back(stats);
  ++w.stage;
  return stats;
}

GoalConditionedAgent evaluation_agent(const World& w) {
  GoalConditionedAgent g;
  g.act = [&w](const Matrix& obs, const Matrix& skills) { return act_deterministic(w.agent.online, obs, skills); };
  g.encode = [&w](const Matrix& obs) { return encode(w.repr, obs); };
  return g;
}

Matrix coverage_skills(const World& w, Rng& rng) {
  if (w.mode == Mode::kUniformBaseline)
    return unit_circle_skills(w.cfg.eval_grid_res * w.cfg.eval_grid_res +
                              w.cfg.eval_draws_per_component * w.cfg.population_max);
  return thorough_skill_set(w.population, w.cfg.eval_grid_res, static_cast<int>(w.cfg.eval_draws_per_component), rng);
}

EvalReport evaluate(const World& w, const MazeSpec& maze, bool coverage, bool zero_shot_eval, GoalMode goal_mode) {
  EvalReport r;
  r.stage = w.stage - 1;
  r.env_steps = w.env_steps;
  if (!w.history.empty()) {
    r.regret_mean = w.history.back().regret_mean;
    r.pop_entropy = w.history.back().pop_entropy;
  }
  const GoalConditionedAgent agent = evaluation_agent(w);
  if (coverage) {
    Rng rng(static_cast<std::uint64_t>(w.cfg.seed) * 1000003u + 17u);
    const Matrix skills = coverage_skills(w, rng);
    r.skill_count = static_cast<std::size_t>(skills.cols());
    r.cover_coords = cover_coords(rollout_positions(maze, agent, skills), maze.cell_size);
  }
  if (zero_shot_eval) {
    r.goal_mode = goal_mode_name(goal_mode);
    r.zero_shot = zero_shot(maze, agent, zero_shot_goals(maze), goal_mode, w.cfg.success_radius);
  }
  return r;
}

}  // namespace rsd
