#include "rsd/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace rsd {
namespace {

using json = nlohmann::json;

template <typename Visitor>
void visit_fields(RunConfig& c, Visitor&& v) {
  v("mode", c.mode);
  v("seed", c.seed);
  v("name", c.name);
  v("env", c.env);
  v("cell_size", c.cell_size);
  v("dt", c.dt);
  v("damping", c.damping);
  v("action_scale", c.action_scale);
  v("v_max", c.v_max);
  v("max_path_length", c.max_path_length);
  v("trajectory_batch_size", c.trajectory_batch_size);
  v("replay_capacity", c.replay_capacity);
  v("option_dim", c.option_dim);
  v("lr_common", c.lr_common);
  v("lr_phi", c.lr_phi);
  v("lr_lambda", c.lr_lambda);
  v("lr_alpha", c.lr_alpha);
  v("lr_generator", c.lr_generator);
  v("generator_std_floor", c.generator_std_floor);
  v("model_layers", c.model_layers);
  v("model_dim", c.model_dim);
  v("gamma", c.gamma);
  v("batch_size", c.batch_size);
  v("dual_slack", c.dual_slack);
  v("alpha1", c.alpha1);
  v("alpha2", c.alpha2);
  v("population_max", c.population_max);
  v("steps_per_stage", c.steps_per_stage);
  v("stages", c.stages);
  v("agent_policy_training_steps", c.agent_policy_training_steps);
  v("rsg_training_steps", c.rsg_training_steps);
  v("tau", c.tau);
  v("target_entropy", c.target_entropy);
  v("alpha_init", c.alpha_init);
  v("lambda_init", c.lambda_init);
  v("centering_weight", c.centering_weight);
  v("p_min", c.p_min);
  v("reward_scale", c.reward_scale);
  v("value_samples", c.value_samples);
  v("kl_samples", c.kl_samples);
  v("rsg_skill_batch", c.rsg_skill_batch);
  v("regret_score_draws", c.regret_score_draws);
  v("regret_metric_draws", c.regret_metric_draws);
  v("score_function_gradient", c.score_function_gradient);
  v("repr_stride", c.repr_stride);
  v("eval_grid_res", c.eval_grid_res);
  v("eval_draws_per_component", c.eval_draws_per_component);
  v("success_radius", c.success_radius);
  v("entropy_samples", c.entropy_samples);
  v("keep_checkpoints", c.keep_checkpoints);
}

std::string type_name(const json& j) { return j.type_name(); }

void read_field(const json& j, const std::string& key, std::string& out) {
  if (!j.is_string()) throw ConfigError("config." + key + ": expected string, got " + type_name(j));
  out = j.get<std::string>();
}
void read_field(const json& j, const std::string& key, double& out) {
  if (!j.is_number()) throw ConfigError("config." + key + ": expected number, got " + type_name(j));
  out = j.get<double>();
}
void read_field(const json& j, const std::string& key, std::int64_t& out) {
  if (j.is_number_integer()) {
    out = j.get<std::int64_t>();
    return;
  }
  // 3e6 style integers arrive as floats.
  if (j.is_number_float()) {
    const double d = j.get<double>();
    if (d == static_cast<double>(static_cast<std::int64_t>(d))) {
      out = static_cast<std::int64_t>(d);
      return;
    }
  }
  throw ConfigError("config." + key + ": expected integer, got " + type_name(j) + " " + j.dump());
}
void read_field(const json& j, const std::string& key, bool& out) {
  if (!j.is_boolean()) throw ConfigError("config." + key + ": expected boolean, got " + type_name(j));
  out = j.get<bool>();
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("config." + key + ": " + what);
}

}  // namespace

std::string RunConfig::env_stem() const { return std::filesystem::path(env).stem().string(); }

void validate(const RunConfig& c) {
  require(c.mode == "rsd" || c.mode == "uniform-baseline", "mode", "must be 'rsd' or 'uniform-baseline'");
  require(!c.env.empty(), "env", "must name a layout");
  for (auto [k, v] : {std::pair{"cell_size", c.cell_size}, {"dt", c.dt}, {"action_scale", c.action_scale},
                      {"v_max", c.v_max}, {"lr_common", c.lr_common}, {"lr_phi", c.lr_phi},
                      {"lr_lambda", c.lr_lambda}, {"lr_alpha", c.lr_alpha}, {"lr_generator", c.lr_generator},
                      {"dual_slack", c.dual_slack}, {"alpha_init", c.alpha_init},
                      {"success_radius", c.success_radius}, {"reward_scale", c.reward_scale}})
    require(v > 0, k, "must be positive");
  for (auto [k, v] : {std::pair{"max_path_length", c.max_path_length},
                      {"trajectory_batch_size", c.trajectory_batch_size},
                      {"replay_capacity", c.replay_capacity},
                      {"option_dim", c.option_dim},
                      {"model_layers", c.model_layers},
                      {"model_dim", c.model_dim},
                      {"batch_size", c.batch_size},
                      {"population_max", c.population_max},
                      {"steps_per_stage", c.steps_per_stage},
                      {"stages", c.stages},
                      {"agent_policy_training_steps", c.agent_policy_training_steps},
                      {"rsg_training_steps", c.rsg_training_steps},
                      {"value_samples", c.value_samples},
                      {"kl_samples", c.kl_samples},
                      {"rsg_skill_batch", c.rsg_skill_batch},
                      {"regret_score_draws", c.regret_score_draws},
                      {"regret_metric_draws", c.regret_metric_draws},
                      {"repr_stride", c.repr_stride},
                      {"entropy_samples", c.entropy_samples},
                      {"eval_draws_per_component", c.eval_draws_per_component}})
    require(v > 0, k, "must be positive");
  require(c.eval_grid_res >= 2, "eval_grid_res", "must be >= 2");
  require(c.keep_checkpoints >= 0, "keep_checkpoints", "must be >= 0");
  require(c.seed >= 0, "seed", "must be >= 0");
  require(c.damping >= 0 && c.damping < 1, "damping", "must be in [0, 1)");
  require(c.gamma > 0 && c.gamma < 1, "gamma", "must be in (0, 1)");
  require(c.tau >= 0 && c.tau <= 1, "tau", "must be in [0, 1]");
  require(c.generator_std_floor > 0 && c.generator_std_floor < 1, "generator_std_floor", "must be in (0, 1)");
  require(c.alpha1 >= 0, "alpha1", "must be >= 0");
  require(c.alpha2 >= 0, "alpha2", "must be >= 0");
  require(c.lambda_init >= 0, "lambda_init", "must be >= 0");
  require(c.centering_weight >= 0, "centering_weight", "must be >= 0");
  require(c.p_min >= 0 && c.p_min * static_cast<double>(c.population_max) <= 1.0, "p_min",
          "must satisfy 0 <= p_min * population_max <= 1");
}

nlohmann::json to_json(const RunConfig& cfg) {
  json doc = json::object();
  RunConfig copy = cfg;
  visit_fields(copy, [&](const char* key, auto& field) { doc[key] = field; });
  return doc;
}

RunConfig config_from_json(const nlohmann::json& doc) {
  if (doc.is_null()) return RunConfig{};
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object at top level");
  RunConfig cfg;
  std::set<std::string> known;
  visit_fields(cfg, [&](const char* key, auto& field) {
    known.insert(key);
    if (auto it = doc.find(key); it != doc.end()) read_field(*it, key, field);
  });
  for (const auto& [key, value] : doc.items())
    if (!known.count(key)) throw ConfigError("config." + key + ": unknown key");
  return cfg;
}

void apply_overrides(nlohmann::json& doc, const std::vector<std::string>& overrides) {
  if (doc.is_null()) doc = json::object();
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "': expected key=value");
    const std::string key = o.substr(0, eq);
    const std::string value = o.substr(eq + 1);
    json parsed = json::parse(value, nullptr, false);
    doc[key] = parsed.is_discarded() ? json(value) : parsed;
  }
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
      try {
        doc = json::parse(text);
      } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
      }
    }
  }
  apply_overrides(doc, overrides);
  RunConfig cfg = config_from_json(doc);
  validate(cfg);
  return cfg;
}

std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string text = to_json(cfg).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace rsd
