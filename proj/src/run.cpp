#include "rsd/run.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "rsd/checkpoint.hpp"

#ifndef RSD_VERSION
#define RSD_VERSION "unknown"
#endif

namespace rsd {

namespace fs = std::filesystem;
using nlohmann::json;

std::atomic<bool> g_stop_requested{false};

std::string version_string() { return RSD_VERSION; }

namespace {

std::string timestamp(const char* fmt) {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[64];
  std::strftime(buf, sizeof(buf), fmt, &tm);
  return buf;
}

void write_json(const std::string& path, const json& j) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp + "'");
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

std::string fresh_run_dir(const std::string& parent, const RunConfig& cfg) {
  const std::string base = cfg.run_name() + "-" + std::to_string(cfg.seed) + "-" + timestamp("%Y%m%dT%H%M%SZ");
  fs::path dir = fs::path(parent) / base;
  for (int k = 1; fs::exists(dir); ++k) dir = fs::path(parent) / (base + "-" + std::to_string(k));
  fs::create_directories(dir);
  return dir.string();
}

GoalMode default_goal_mode(const World& w) {
  return w.mode == Mode::kRsd ? GoalMode::kRsd : GoalMode::kMetraFixed;
}

}  // namespace

RunConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides,
                         const std::optional<std::int64_t>& seed, const std::optional<std::string>& mode) {
  std::vector<std::string> all = overrides;
  if (seed) all.push_back("seed=" + std::to_string(*seed));
  if (mode) all.push_back("mode=\"" + *mode + "\"");
  return load_config(path, all);
}

json make_manifest(const RunConfig& cfg, const std::string& started) {
  return {{"config", to_json(cfg)},
          {"seed", cfg.seed},
          {"mode", cfg.mode},
          {"version", version_string()},
          {"started", started}};
}

std::string cmd_train(const TrainOptions& opts) {
  std::ostream& log = opts.log ? *opts.log : std::cerr;
  std::string dir;
  std::optional<World> world;
  Scalar clock_offset = 0;

  if (!opts.resume.empty()) {
    dir = opts.resume;
    if (!fs::is_directory(dir)) throw ConfigError("resume: '" + dir + "' is not a run directory");
    const std::string cfg_path = opts.config_path.empty() ? (fs::path(dir) / "config.json").string() : opts.config_path;
    const RunConfig wanted = resolve_config(cfg_path, opts.overrides, opts.seed, opts.mode);
    const auto ckpts = list_checkpoints(dir);
    if (ckpts.empty()) {
      world.emplace(make_world(wanted));
    } else {
      world.emplace(load_checkpoint(ckpts.back()));
      World& w = *world;
      if (config_hash(w.cfg) != config_hash(wanted)) {
        if (!opts.force)
          throw ConfigError("resume: config differs from the checkpoint in '" + dir + "' (use --force to override)");
        log << "resume: config differs from the checkpoint, continuing with the new config (--force)\n";
        w.cfg = wanted;
        w.population.capacity = static_cast<std::size_t>(wanted.population_max);
      }
    }
    World& w = *world;
    write_json((fs::path(dir) / "config.json").string(), to_json(w.cfg));
    const std::string metrics = (fs::path(dir) / "metrics.csv").string();
    truncate_metrics(metrics, w.stage);
    if (fs::exists(metrics)) {
      const auto rows = read_metrics(metrics);
      if (!rows.empty()) clock_offset = rows.back().wall_clock_s;
    }
    log << "resuming " << dir << " at stage " << w.stage << '\n';
  } else {
    const RunConfig cfg = resolve_config(opts.config_path, opts.overrides, opts.seed, opts.mode);
    dir = fresh_run_dir(opts.out, cfg);
    write_json((fs::path(dir) / "manifest.json").string(), make_manifest(cfg, timestamp("%Y-%m-%dT%H:%M:%SZ")));
    write_json((fs::path(dir) / "config.json").string(), to_json(cfg));
    world.emplace(make_world(cfg));
    log << "run directory " << dir << '\n';
  }

  World& w = *world;
  const std::string metrics = (fs::path(dir) / "metrics.csv").string();
  const auto t0 = std::chrono::steady_clock::now();
  while (w.stage < w.cfg.stages) {
    if (opts.stop_after && w.stage >= *opts.stop_after) break;
    if (g_stop_requested) break;
    const StageStats s = run_stage(w);
    const EvalReport r = evaluate(w, w.maze, true, true, default_goal_mode(w));
    MetricsRow row;
    row.stage = s.stage;
    row.env_steps = w.env_steps;
    row.cover_coords = r.cover_coords;
    row.regret_mean = s.regret_mean;
    row.pop_entropy = s.pop_entropy;
    row.ar = r.zero_shot->ar;
    row.fd_mean = r.zero_shot->fd_mean;
    row.wall_clock_s = clock_offset + std::chrono::duration<Scalar>(std::chrono::steady_clock::now() - t0).count();
    write_metrics(row, metrics);
    save_checkpoint(w, dir);
    log << "stage " << s.stage << " steps " << w.env_steps << " cover " << r.cover_coords << " regret "
        << s.regret_mean << " entropy " << s.pop_entropy << " ar " << row.ar << " lambda " << s.lambda << " alpha "
        << s.alpha << " critic " << s.critic_loss << " constraint " << s.constraint << " t "
        << row.wall_clock_s << "s\n";
  }
  return dir;
}

EvalOutput cmd_eval(const EvalOptions& opts) {
  std::string ckpt = opts.checkpoint;
  if (fs::is_directory(ckpt)) {
    const auto all = list_checkpoints(ckpt);
    if (all.empty()) throw ConfigError("eval: no checkpoint in '" + ckpt + "'");
    ckpt = all.back();
  }
  if (!fs::exists(ckpt)) throw ConfigError("eval: checkpoint '" + ckpt + "' not found");
  if (opts.what != "coverage" && opts.what != "zeroshot" && opts.what != "all")
    throw ConfigError("eval: --what must be coverage, zeroshot or all");

  const World w = load_checkpoint(ckpt);
  MazeSpec maze = w.maze;
  if (!opts.env.empty()) {
    RunConfig c = w.cfg;
    c.env = opts.env;
    maze = maze_from_config(c);
  }
  const GoalMode gm = opts.goal_mode.empty() ? default_goal_mode(w) : parse_goal_mode(opts.goal_mode);
  const bool cov = opts.what != "zeroshot";
  const bool zs = opts.what != "coverage";

  EvalOutput out;
  out.report = evaluate(w, maze, cov, zs, gm);
  json j = to_json(out.report);
  j["checkpoint"] = fs::path(ckpt).filename().string();
  j["env"] = maze.name;
  j["what"] = opts.what;

  const fs::path out_dir = opts.out.empty() ? fs::path(ckpt).parent_path() / "eval" : fs::path(opts.out);
  fs::create_directories(out_dir);
  std::string stem = fs::path(ckpt).stem().string() + "-" + opts.what + "-" + maze.name;
  if (zs) stem += "-" + goal_mode_name(gm);
  out.json_path = (out_dir / (stem + ".json")).string();
  out.csv_path = (out_dir / (stem + ".csv")).string();
  write_json(out.json_path, j);

  std::ofstream csv(out.csv_path + ".tmp", std::ios::trunc);
  csv.precision(17);
  csv << "stage,env_steps,env,what,goal_mode,skill_count,cover_coords,ar,fd_mean\n";
  csv << out.report.stage << ',' << out.report.env_steps << ',' << maze.name << ',' << opts.what << ','
      << (zs ? goal_mode_name(gm) : "") << ',' << out.report.skill_count << ',' << out.report.cover_coords << ','
      << (zs ? out.report.zero_shot->ar : 0.0) << ',' << (zs ? out.report.zero_shot->fd_mean : 0.0) << '\n';
  csv.close();
  fs::rename(out.csv_path + ".tmp", out.csv_path);
  return out;
}

}  // namespace rsd
