#include "doctest.h"

#include <filesystem>
#include <functional>
#include <fstream>

#include "rsd/config.hpp"

using namespace rsd;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty file yields the hyperparameter table defaults") {
  const RunConfig c = load_config(write_temp("rsd_empty.json", ""));
  CHECK(c.max_path_length == 300);
  CHECK(c.trajectory_batch_size == 16);
  CHECK(c.replay_capacity == 3000000);
  CHECK(c.option_dim == 2);
  CHECK(c.lr_common == 1e-4);
  CHECK(c.lr_phi == 1e-3);
  CHECK(c.model_layers == 2);
  CHECK(c.gamma == 0.99);
  CHECK(c.batch_size == 1024);
  CHECK(c.dual_slack == 1e-3);
  CHECK(c.alpha1 == 5.0);
  CHECK(c.alpha2 == 1.0);
  CHECK(c.population_max == 15);
  CHECK(c.steps_per_stage == 50);
  CHECK(c.model_dim == 256);
  CHECK(c.mode == "rsd");
  CHECK(c.lambda_init == 30.0);
  CHECK(c.p_min == 0.01);
  CHECK(c.rsg_training_steps == 500);
  CHECK(load_config("").seed == 0);
}

TEST_CASE("overrides parse as JSON with a string fallback") {
  const RunConfig c = load_config("", {"alpha1=5", "alpha2=1", "env=large", "seed=3", "stages=7",
                                       "score_function_gradient=true", "replay_capacity=3e6"});
  CHECK(c.alpha1 == 5.0);
  CHECK(c.alpha2 == 1.0);
  CHECK(c.env == "large");
  CHECK(c.seed == 3);
  CHECK(c.stages == 7);
  CHECK(c.score_function_gradient);
  CHECK(c.replay_capacity == 3000000);
  CHECK_THROWS_AS(load_config("", {"alpha1"}), ConfigError);
}

TEST_CASE("invalid values name the field") {
  CHECK(error_of([] { load_config("", {"gamma=1.5"}); }).find("config.gamma") != std::string::npos);
  CHECK(error_of([] { load_config("", {"gamma=0"}); }).find("config.gamma") != std::string::npos);
  CHECK(error_of([] { load_config("", {"batch_size=0"}); }).find("config.batch_size") != std::string::npos);
  CHECK(error_of([] { load_config("", {"mode=\"both\""}); }).find("config.mode") != std::string::npos);
  CHECK(error_of([] { load_config("", {"p_min=0.5"}); }).find("config.p_min") != std::string::npos);
}

TEST_CASE("unknown keys and type errors fail fast") {
  CHECK(error_of([] { load_config("", {"alpah1=5"}); }).find("config.alpah1: unknown key") != std::string::npos);
  const std::string path = write_temp("rsd_bad_type.json", R"({"stages": "many"})");
  const std::string msg = error_of([&] { load_config(path); });
  CHECK(msg.find("config.stages") != std::string::npos);
  CHECK(msg.find("integer") != std::string::npos);
  CHECK(error_of([] { load_config("", {"stages=2.5"}); }).find("config.stages") != std::string::npos);
  CHECK_THROWS_AS(load_config(write_temp("rsd_not_json.json", "{oops")), ConfigError);
  CHECK_THROWS_AS(load_config(write_temp("rsd_array.json", "[1, 2]")), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("json round trip and hash") {
  RunConfig c = load_config("", {"seed=4", "alpha1=2.5", "env=large"});
  const RunConfig back = config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(config_hash(back) == config_hash(c));
  c.seed = 5;
  CHECK(config_hash(back) != config_hash(c));
}

TEST_CASE("run names") {
  RunConfig c;
  CHECK(c.run_name() == "umaze-rsd");
  c.env = "/tmp/layouts/my-maze.txt";
  c.mode = "uniform-baseline";
  CHECK(c.run_name() == "my-maze-uniform-baseline");
  c.name = "trial";
  CHECK(c.run_name() == "trial");
}
