// rsd: train | eval | print-config

#include <csignal>
#include <iostream>

#include "CLI11.hpp"

#include "rsd/run.hpp"

namespace {

void on_signal(int) { rsd::g_stop_requested = true; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regret-aware skill discovery on point-mass mazes"};
  app.require_subcommand(1);

  rsd::TrainOptions topt;
  std::int64_t seed = 0;
  std::string mode;
  int stop_after = -1;
  auto* train = app.add_subcommand("train", "Run training stages, writing a run directory");
  train->add_option("--config", topt.config_path, "JSON config file (empty means defaults)");
  auto* seed_opt = train->add_option("--seed", seed, "Random seed");
  train->add_option("--mode", mode, "rsd | uniform-baseline");
  train->add_option("--out", topt.out, "Parent directory for new runs")->capture_default_str();
  train->add_option("--resume", topt.resume, "Continue the run in this directory");
  train->add_flag("--force", topt.force, "Resume even if the config changed");
  train->add_option("--stop-after", stop_after, "Stop once this many stages are complete");
  train->add_option("overrides", topt.overrides, "key=value config overrides");

  rsd::EvalOptions eopt;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("checkpoint", eopt.checkpoint, "Checkpoint file or run directory")->required();
  eval->add_option("--env", eopt.env, "Layout to evaluate on (default: training layout)");
  eval->add_option("--what", eopt.what, "coverage | zeroshot | all")->capture_default_str();
  eval->add_option("--goal-mode", eopt.goal_mode, "rsd | metra-f | metra-d");
  eval->add_option("--out", eopt.out, "Report directory (default: <run>/eval)");

  std::string pc_config;
  std::vector<std::string> pc_overrides;
  std::string pc_mode;
  std::int64_t pc_seed = 0;
  auto* pc = app.add_subcommand("print-config", "Print the fully resolved config");
  pc->add_option("--config", pc_config, "JSON config file");
  auto* pc_seed_opt = pc->add_option("--seed", pc_seed, "Random seed");
  pc->add_option("--mode", pc_mode, "rsd | uniform-baseline");
  pc->add_option("overrides", pc_overrides, "key=value config overrides");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train) {
      if (*seed_opt) topt.seed = seed;
      if (!mode.empty()) topt.mode = mode;
      if (stop_after >= 0) topt.stop_after = stop_after;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << rsd::cmd_train(topt) << '\n';
    } else if (*eval) {
      const auto out = rsd::cmd_eval(eopt);
      std::cout << out.json_path << '\n' << out.csv_path << '\n';
    } else if (*pc) {
      std::optional<std::int64_t> s;
      if (*pc_seed_opt) s = pc_seed;
      std::optional<std::string> m;
      if (!pc_mode.empty()) m = pc_mode;
      std::cout << rsd::to_json(rsd::resolve_config(pc_config, pc_overrides, s, m)).dump(2) << '\n';
    }
  } catch (const rsd::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
