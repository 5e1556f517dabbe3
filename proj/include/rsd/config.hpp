#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "rsd/common.hpp"

namespace rsd {

// Every tunable of a run. Defaults follow the Maze2d-large hyperparameter
// table; model_dim defaults to 256 for CPU budgets.
struct RunConfig {
  std::string mode = "rsd";  // rsd | uniform-baseline
  std::int64_t seed = 0;
  std::string name;          // run-directory prefix; defaults to <env>-<mode>
  std::string env = "umaze";  // bundled layout name or layout file

  // point-mass physics
  double cell_size = 1.0;
  double dt = 0.1;
  double damping = 0.1;
  double action_scale = 1.0;
  double v_max = 2.0;

  std::int64_t max_path_length = 300;
  std::int64_t trajectory_batch_size = 16;
  std::int64_t replay_capacity = 3000000;
  std::int64_t option_dim = 2;
  double lr_common = 1e-4;
  double lr_phi = 1e-3;
  double lr_lambda = 1e-4;
  double lr_alpha = 1e-4;
  double lr_generator = 1e-2;
  double generator_std_floor = 1e-3;
  std::int64_t model_layers = 2;
  std::int64_t model_dim = 256;
  double gamma = 0.99;
  std::int64_t batch_size = 1024;
  double dual_slack = 1e-3;
  double alpha1 = 5.0;
  double alpha2 = 1.0;
  std::int64_t population_max = 15;
  std::int64_t steps_per_stage = 50;  // collection rounds per stage

  std::int64_t stages = 40;
  std::int64_t agent_policy_training_steps = 50;  // gradient steps per round
  std::int64_t rsg_training_steps = 500;

  double tau = 0.005;
  double target_entropy = -2.0;
  double alpha_init = 0.01;
  double lambda_init = 30.0;
  double centering_weight = 1.0;
  double p_min = 0.01;
  double reward_scale = 1.0;
  std::int64_t value_samples = 32;
  std::int64_t kl_samples = 256;
  std::int64_t rsg_skill_batch = 4;
  std::int64_t regret_score_draws = 32;
  std::int64_t regret_metric_draws = 64;
  bool score_function_gradient = false;
  std::int64_t repr_stride = 10;

  // evaluation
  std::int64_t eval_grid_res = 9;
  std::int64_t eval_draws_per_component = 4;
  double success_radius = 1.0;
  std::int64_t entropy_samples = 4096;

  std::int64_t keep_checkpoints = 2;  // 0 keeps every checkpoint

  std::string run_name() const { return name.empty() ? env_stem() + "-" + mode : name; }
  std::string env_stem() const;
};

// Throws ConfigError naming the offending field.
void validate(const RunConfig& cfg);

nlohmann::json to_json(const RunConfig& cfg);

// Unknown keys and type mismatches throw ConfigError with a `config.<key>` path.
RunConfig config_from_json(const nlohmann::json& doc);

// Applies key=value overrides; values are parsed as JSON, falling back to a
// plain string.
void apply_overrides(nlohmann::json& doc, const std::vector<std::string>& overrides);

// Reads a JSON config file (an empty file means all defaults), applies
// overrides and validates.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

// FNV-1a over the canonical JSON dump; excludes nothing.
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace rsd
