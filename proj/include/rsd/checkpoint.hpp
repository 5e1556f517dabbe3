#pragma once

// Full training state on disk: a JSON document for parameters, optimiser
// moments, population, buffers and RNG, plus a binary replay sidecar.

#include <string>
#include <vector>

#include "json.hpp"

#include "rsd/nn.hpp"
#include "rsd/trainer.hpp"

namespace rsd {

nlohmann::json net_to_json(const Net& net);
Net net_from_json(const nlohmann::json& j);

// Paths written for stage `stage` inside `dir`.
std::string checkpoint_path(const std::string& dir, int stage);
std::string replay_path(const std::string& dir, int stage);

// Writes ckpt-XXXX.json and replay-XXXX.bin atomically for the last completed
// stage (w.stage - 1), then prunes older ones beyond keep_checkpoints.
std::string save_checkpoint(const World& w, const std::string& dir);

// Restores a World from a checkpoint file; the replay sidecar is looked up
// next to it.
World load_checkpoint(const std::string& path);

// Checkpoint files in `dir`, oldest stage first.
std::vector<std::string> list_checkpoints(const std::string& dir);

}  // namespace rsd
