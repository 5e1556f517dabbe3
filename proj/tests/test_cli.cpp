#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"
#include "rsd/checkpoint.hpp"
#include "rsd/metrics.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kTiny =
    R"({"env": "open-8x8", "model_dim": 16, "batch_size": 32, "steps_per_stage": 2, "trajectory_batch_size": 2,
        "agent_policy_training_steps": 3, "rsg_training_steps": 10, "max_path_length": 60, "value_samples": 4,
        "kl_samples": 16, "regret_score_draws": 4, "regret_metric_draws": 8, "entropy_samples": 64,
        "population_max": 3, "stages": 5, "keep_checkpoints": 0})";

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  static int counter = 0;
  const fs::path out = fs::temp_directory_path() / ("rsd_cli_out_" + std::to_string(counter++));
  const std::string cmd = std::string(RSD_CLI) + " " + args + " > " + out.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  fs::remove(out);
  return r;
}

std::string scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string tiny_config_file(const std::string& dir) {
  const std::string path = dir + "/tiny.json";
  std::ofstream(path) << kTiny;
  return path;
}

// Run directory printed on the last line of `train` output.
std::string run_dir_of(const Result& r) {
  std::istringstream in(r.out);
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  return last;
}

// Metrics rows without the wall-clock column.
std::vector<std::string> metrics_without_clock(const std::string& dir) {
  std::ifstream in(dir + "/metrics.csv");
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) rows.push_back(line.substr(0, line.rfind(',')));
  return rows;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("print-config and exit codes") {
  const Result ok = run("print-config alpha1=5 alpha2=1");
  CHECK(ok.code == 0);
  const auto doc = nlohmann::json::parse(ok.out);
  CHECK(doc["alpha1"] == 5.0);
  CHECK(doc["steps_per_stage"] == 50);
  CHECK(run("print-config gamma=1.5").code == 1);
  CHECK(run("print-config no_such_key=1").code == 1);
  CHECK(run("print-config --config /nonexistent.json").code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("").code == 1);
  CHECK(run("print-config --help").code == 0);
}

TEST_CASE("train twice with one seed gives identical metrics and checkpoints") {
  const std::string dir = scratch("rsd_cli_repro");
  const std::string cfg = tiny_config_file(dir);
  const Result a = run("train --config " + cfg + " --seed 3 --out " + dir + "/runs stages=3");
  const Result b = run("train --config " + cfg + " --seed 3 --out " + dir + "/runs stages=3");
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  const std::string da = run_dir_of(a), db = run_dir_of(b);
  CHECK(da != db);
  CHECK(metrics_without_clock(da) == metrics_without_clock(db));
  CHECK(metrics_without_clock(da).size() == 4);
  for (const char* f : {"ckpt-0002.json", "replay-0002.bin", "config.json"})
    CHECK(slurp(da + "/" + f) == slurp(db + "/" + f));
  const auto manifest = nlohmann::json::parse(slurp(da + "/manifest.json"));
  CHECK(manifest["seed"] == 3);
  CHECK(manifest["mode"] == "rsd");
  CHECK(manifest["config"]["stages"] == 3);
  CHECK(manifest.contains("version"));
  CHECK(manifest.contains("started"));

  const Result c = run("train --config " + cfg + " --seed 4 --out " + dir + "/runs stages=3");
  CHECK(metrics_without_clock(run_dir_of(c)) != metrics_without_clock(da));
  fs::remove_all(dir);
}

TEST_CASE("interrupt and resume continues the stage counter without duplicates") {
  const std::string dir = scratch("rsd_cli_resume");
  const std::string cfg = tiny_config_file(dir);
  const Result full = run("train --config " + cfg + " --seed 1 --out " + dir + "/runs");
  REQUIRE(full.code == 0);
  const Result part = run("train --config " + cfg + " --seed 1 --out " + dir + "/runs --stop-after 4");
  REQUIRE(part.code == 0);
  const std::string rd = run_dir_of(part);
  CHECK(rsd::read_metrics(rd + "/metrics.csv").back().stage == 3);
  // A stray row from a crashed stage must not survive the resume.
  std::ofstream(rd + "/metrics.csv", std::ios::app) << "4,1,1,0,0,0,0,0\n";

  const Result res = run("train --resume " + rd);
  REQUIRE(res.code == 0);
  CHECK(res.out.find("at stage 4") != std::string::npos);
  const auto rows = rsd::read_metrics(rd + "/metrics.csv");
  REQUIRE(rows.size() == 5);
  for (int k = 0; k < 5; ++k) CHECK(rows[k].stage == k);
  CHECK(metrics_without_clock(rd) == metrics_without_clock(run_dir_of(full)));
  CHECK(slurp(rd + "/ckpt-0004.json") == slurp(run_dir_of(full) + "/ckpt-0004.json"));
  fs::remove_all(dir);
}

TEST_CASE("resume refuses a changed config unless forced") {
  const std::string dir = scratch("rsd_cli_force");
  const std::string cfg = tiny_config_file(dir);
  const Result part = run("train --config " + cfg + " --seed 1 --out " + dir + "/runs --stop-after 1");
  REQUIRE(part.code == 0);
  const std::string rd = run_dir_of(part);
  const Result refused = run("train --resume " + rd + " --mode uniform-baseline");
  CHECK(refused.code == 1);
  CHECK(refused.out.find("--force") != std::string::npos);
  const Result forced = run("train --resume " + rd + " --force stages=2");
  CHECK(forced.code == 0);
  CHECK(rsd::read_metrics(rd + "/metrics.csv").size() == 2);
  CHECK(run("train --resume " + dir + "/nowhere").code == 1);
  fs::remove_all(dir);
}

TEST_CASE("eval reports are deterministic and honour the goal mode") {
  const std::string dir = scratch("rsd_cli_eval");
  const std::string cfg = tiny_config_file(dir);
  const Result t = run("train --config " + cfg + " --seed 2 --out " + dir + "/runs stages=2");
  REQUIRE(t.code == 0);
  const std::string rd = run_dir_of(t);

  const Result a = run("eval " + rd + " --what all --out " + dir + "/a");
  const Result b = run("eval " + rd + " --what all --out " + dir + "/b");
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  const std::string name = "ckpt-0001-all-open-8x8-rsd";
  CHECK(slurp(dir + "/a/" + name + ".json") == slurp(dir + "/b/" + name + ".json"));
  CHECK(slurp(dir + "/a/" + name + ".csv") == slurp(dir + "/b/" + name + ".csv"));
  const auto rep = nlohmann::json::parse(slurp(dir + "/a/" + name + ".json"));
  const auto ckpt = nlohmann::json::parse(slurp(rd + "/ckpt-0001.json"));
  CHECK(rep["skill_count"] == 81 + 4 * ckpt["population"]["members"].size());

  const Result d = run("eval " + rd + "/ckpt-0001.json --what zeroshot --goal-mode metra-d");
  REQUIRE(d.code == 0);
  const auto zd = nlohmann::json::parse(slurp(rd + "/eval/ckpt-0001-zeroshot-open-8x8-metra-d.json"));
  CHECK(zd["goal_mode"] == "metra-d");
  CHECK(zd["cover_coords"] == 0);

  const Result other = run("eval " + rd + " --what coverage --env large");
  CHECK(other.code == 0);
  CHECK(fs::exists(rd + "/eval/ckpt-0001-coverage-large.json"));

  CHECK(run("eval " + dir + "/missing.json").code == 1);
  CHECK(run("eval " + rd + " --what everything").code == 1);
  CHECK(run("eval " + rd + " --goal-mode sideways").code == 1);
  fs::remove_all(dir);
}

TEST_CASE("baseline runs write no generator entries") {
  const std::string dir = scratch("rsd_cli_base");
  const std::string cfg = tiny_config_file(dir);
  const Result t = run("train --config " + cfg + " --seed 0 --mode uniform-baseline --out " + dir + "/runs stages=2");
  REQUIRE(t.code == 0);
  const auto ckpt = nlohmann::json::parse(slurp(run_dir_of(t) + "/ckpt-0001.json"));
  CHECK(ckpt["population"]["members"].empty());
  CHECK(ckpt["config"]["mode"] == "uniform-baseline");
  fs::remove_all(dir);
}
