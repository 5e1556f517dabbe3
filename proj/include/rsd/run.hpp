#pragma once

// Run directories and the train / eval / print-config commands behind the CLI.

#include <atomic>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "rsd/config.hpp"
#include "rsd/metrics.hpp"
#include "rsd/trainer.hpp"

namespace rsd {

// Set from a signal handler; training stops after the current stage's
// checkpoint.
extern std::atomic<bool> g_stop_requested;

struct TrainOptions {
  std::string config_path;  // empty: all defaults
  std::vector<std::string> overrides;
  std::optional<std::int64_t> seed;
  std::optional<std::string> mode;
  std::string out = "runs";  // parent of new run directories
  std::string resume;        // run directory to continue
  bool force = false;        // resume despite a config mismatch
  std::optional<int> stop_after;  // stop once this many stages are complete
  std::ostream* log = nullptr;
};

// Resolves the config from file, --seed/--mode and overrides.
RunConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides,
                         const std::optional<std::int64_t>& seed, const std::optional<std::string>& mode);

// Returns the run directory.
std::string cmd_train(const TrainOptions& opts);

struct EvalOptions {
  std::string checkpoint;  // checkpoint file or run directory (latest)
  std::string env;         // empty: the training layout
  std::string what = "all";  // coverage | zeroshot | all
  std::string goal_mode;     // empty: rsd for rsd runs, metra-f otherwise
  std::string out;           // empty: <run dir>/eval
};

struct EvalOutput {
  EvalReport report;
  std::string json_path;
  std::string csv_path;
};

EvalOutput cmd_eval(const EvalOptions& opts);

std::string version_string();

nlohmann::json make_manifest(const RunConfig& cfg, const std::string& started);

}  // namespace rsd
