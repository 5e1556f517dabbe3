#include "rsd/checkpoint.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <regex>

namespace rsd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
  json data = json::array();
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"shape", {m.rows(), m.cols()}}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const json& j) {
  const Index rows = j.at("shape").at(0).get<Index>();
  const Index cols = j.at("shape").at(1).get<Index>();
  const auto& data = j.at("data");
  if (static_cast<Index>(data.size()) != rows * cols) throw ConfigError("checkpoint: tensor size does not match shape");
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)].get<Scalar>();
  return m;
}

json vector_to_json(const Vector& v) { return matrix_to_json(Matrix(v)); }
Vector vector_from_json(const json& j) {
  const Matrix m = matrix_from_json(j);
  return Eigen::Map<const Vector>(m.data(), m.size());
}

// NaN and infinities have no JSON spelling.
json scalar_to_json(Scalar x) { return std::isfinite(x) ? json(x) : json(nullptr); }
Scalar scalar_from_json(const json& j) {
  return j.is_null() ? std::numeric_limits<Scalar>::quiet_NaN() : j.get<Scalar>();
}

json adam_to_json(const Adam& a) {
  return {{"m", vector_to_json(a.m)}, {"v", vector_to_json(a.v)}, {"step", a.step}, {"lr", a.lr}};
}

Adam adam_from_json(const json& j) {
  Adam a;
  a.m = vector_from_json(j.at("m"));
  a.v = vector_from_json(j.at("v"));
  a.step = j.at("step").get<std::int64_t>();
  a.lr = j.at("lr").get<Scalar>();
  return a;
}

json actor_critic_to_json(const ActorCritic& m) {
  return {{"policy", net_to_json(m.policy)}, {"q1", net_to_json(m.q1)}, {"q2", net_to_json(m.q2)},
          {"log_alpha", m.log_alpha}};
}

void actor_critic_from_json(const json& j, ActorCritic& m) {
  m.policy = net_from_json(j.at("policy"));
  m.q1 = net_from_json(j.at("q1"));
  m.q2 = net_from_json(j.at("q2"));
  m.log_alpha = j.at("log_alpha").get<Scalar>();
}

json generator_to_json(const Generator& g) {
  return {{"mean", vector_to_json(g.mean)}, {"log_std", vector_to_json(g.log_std)}, {"stage", g.stage}};
}

Generator generator_from_json(const json& j) {
  Generator g;
  g.mean = vector_from_json(j.at("mean"));
  g.log_std = vector_from_json(j.at("log_std"));
  g.stage = j.at("stage").get<int>();
  return g;
}

json vectors_to_json(const std::vector<Vector>& vs) {
  json a = json::array();
  for (const auto& v : vs) a.push_back(vector_to_json(v));
  return a;
}

std::vector<Vector> vectors_from_json(const json& j) {
  std::vector<Vector> out;
  for (const auto& e : j) out.push_back(vector_from_json(e));
  return out;
}

json stage_buffer_to_json(const StageReprBuffer& b) {
  return {{"states", vectors_to_json(b.states)}, {"final", b.final_flags}};
}

StageReprBuffer stage_buffer_from_json(const json& j) {
  StageReprBuffer b;
  b.states = vectors_from_json(j.at("states"));
  b.final_flags = j.at("final").get<std::vector<bool>>();
  if (b.states.size() != b.final_flags.size()) throw ConfigError("checkpoint: stage buffer flags do not match states");
  return b;
}

json stats_to_json(const StageStats& s) {
  return {{"stage", s.stage},
          {"regret_mean", scalar_to_json(s.regret_mean)},
          {"pop_entropy", scalar_to_json(s.pop_entropy)},
          {"rsg_objective", scalar_to_json(s.rsg_objective)},
          {"part2_aborted", s.part2_aborted},
          {"proximity_skipped", s.proximity_skipped},
          {"critic_loss", scalar_to_json(s.critic_loss)},
          {"phi_loss", scalar_to_json(s.phi_loss)},
          {"constraint", scalar_to_json(s.constraint)},
          {"lambda", s.lambda},
          {"alpha", s.alpha},
          {"sac_updates", s.sac_updates}};
}

StageStats stats_from_json(const json& j) {
  StageStats s;
  s.stage = j.at("stage").get<int>();
  s.regret_mean = scalar_from_json(j.at("regret_mean"));
  s.pop_entropy = scalar_from_json(j.at("pop_entropy"));
  s.rsg_objective = scalar_from_json(j.at("rsg_objective"));
  s.part2_aborted = j.at("part2_aborted").get<bool>();
  s.proximity_skipped = j.at("proximity_skipped").get<bool>();
  s.critic_loss = scalar_from_json(j.at("critic_loss"));
  s.phi_loss = scalar_from_json(j.at("phi_loss"));
  s.constraint = scalar_from_json(j.at("constraint"));
  s.lambda = j.at("lambda").get<Scalar>();
  s.alpha = j.at("alpha").get<Scalar>();
  s.sac_updates = j.at("sac_updates").get<std::size_t>();
  return s;
}

void write_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp + "'");
    out << text;
    if (!out) throw ConfigError("failed writing '" + tmp + "'");
  }
  fs::rename(tmp, path);
}

std::string stage_file(const std::string& dir, const char* prefix, int stage, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s-%04d.%s", prefix, stage, ext);
  return (fs::path(dir) / buf).string();
}

int stage_of(const std::string& path) {
  static const std::regex re(R"(ckpt-(\d+)\.json)");
  std::smatch m;
  const std::string name = fs::path(path).filename().string();
  return std::regex_match(name, m, re) ? std::stoi(m[1]) : -1;
}

}  // namespace

json net_to_json(const Net& net) {
  json layers = json::array();
  for (const auto& l : net.layers())
    layers.push_back({{"weight", matrix_to_json(l.weight)},
                      {"bias", vector_to_json(l.bias)},
                      {"activation", nn::activation_name(l.activation)}});
  return {{"layers", std::move(layers)}};
}

Net net_from_json(const json& j) {
  std::vector<nn::Layer<Scalar>> layers;
  for (const auto& e : j.at("layers")) {
    nn::Layer<Scalar> l;
    l.weight = matrix_from_json(e.at("weight"));
    l.bias = vector_from_json(e.at("bias"));
    l.activation = nn::parse_activation(e.at("activation").get<std::string>());
    layers.push_back(std::move(l));
  }
  return Net(std::move(layers));
}

std::string checkpoint_path(const std::string& dir, int stage) { return stage_file(dir, "ckpt", stage, "json"); }
std::string replay_path(const std::string& dir, int stage) { return stage_file(dir, "replay", stage, "bin"); }

std::vector<std::string> list_checkpoints(const std::string& dir) {
  std::vector<std::pair<int, std::string>> found;
  if (!fs::is_directory(dir)) return {};
  for (const auto& e : fs::directory_iterator(dir)) {
    const int s = stage_of(e.path().string());
    if (s >= 0) found.emplace_back(s, e.path().string());
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> out;
  for (auto& [s, p] : found) out.push_back(std::move(p));
  return out;
}

std::string save_checkpoint(const World& w, const std::string& dir) {
  const int stage = w.stage - 1;
  json j;
  j["format"] = "rsd-checkpoint-1";
  j["config"] = to_json(w.cfg);
  j["config_hash"] = std::to_string(config_hash(w.cfg));
  j["stage"] = w.stage;
  j["env_steps"] = w.env_steps;
  j["rng"] = w.rng.save();

  j["agent"] = actor_critic_to_json(w.agent.online);
  j["q1_target"] = net_to_json(w.agent.q1_target);
  j["q2_target"] = net_to_json(w.agent.q2_target);
  j["agent_opt"] = {{"policy", adam_to_json(w.agent_opt.policy)},
                    {"q1", adam_to_json(w.agent_opt.q1)},
                    {"q2", adam_to_json(w.agent_opt.q2)},
                    {"alpha", adam_to_json(w.agent_opt.alpha)}};
  j["repr"] = {{"encoder", net_to_json(w.repr.encoder)}, {"lambda", w.repr.lambda}};
  j["repr_opt"] = adam_to_json(w.repr_opt);

  json members = json::array();
  for (const auto& m : w.population.members)
    members.push_back({{"gen", generator_to_json(m.gen)}, {"regret_score", m.regret_score}});
  j["population"] = {{"members", std::move(members)}, {"weights", vector_to_json(w.population.weights)}};
  j["snapshot"] = w.snapshot ? json{{"stage", w.snapshot->stage}, {"model", actor_critic_to_json(w.snapshot->model)}}
                             : json(nullptr);

  j["stage_buffer"] = stage_buffer_to_json(w.stage_buffer);
  j["archived_buffer"] = stage_buffer_to_json(w.archived_buffer);
  j["finals_new"] = vectors_to_json(w.finals_new);
  j["finals_old"] = vectors_to_json(w.finals_old);
  json history = json::array();
  for (const auto& s : w.history) history.push_back(stats_to_json(s));
  j["history"] = std::move(history);

  fs::create_directories(dir);
  const std::string rpath = replay_path(dir, stage);
  w.replay.save(rpath + ".tmp");
  fs::rename(rpath + ".tmp", rpath);
  j["replay"] = fs::path(rpath).filename().string();
  const std::string cpath = checkpoint_path(dir, stage);
  write_atomic(cpath, j.dump());

  if (w.cfg.keep_checkpoints > 0) {
    auto all = list_checkpoints(dir);
    const std::size_t keep = static_cast<std::size_t>(w.cfg.keep_checkpoints);
    for (std::size_t i = 0; i + keep < all.size(); ++i) {
      const int s = stage_of(all[i]);
      fs::remove(all[i]);
      fs::remove(replay_path(dir, s));
    }
  }
  return cpath;
}

World load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read checkpoint '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  try {
    if (j.value("format", "") != "rsd-checkpoint-1") throw ConfigError("checkpoint '" + path + "': unknown format");
    World w = make_world(config_from_json(j.at("config")));
    w.stage = j.at("stage").get<int>();
    w.env_steps = j.at("env_steps").get<std::int64_t>();
    w.rng.load(j.at("rng").get<std::string>());

    actor_critic_from_json(j.at("agent"), w.agent.online);
    w.agent.q1_target = net_from_json(j.at("q1_target"));
    w.agent.q2_target = net_from_json(j.at("q2_target"));
    const auto& o = j.at("agent_opt");
    w.agent_opt = {adam_from_json(o.at("policy")), adam_from_json(o.at("q1")), adam_from_json(o.at("q2")),
                   adam_from_json(o.at("alpha"))};
    w.repr.encoder = net_from_json(j.at("repr").at("encoder"));
    w.repr.lambda = j.at("repr").at("lambda").get<Scalar>();
    w.repr_opt = adam_from_json(j.at("repr_opt"));

    w.population.members.clear();
    for (const auto& m : j.at("population").at("members"))
      w.population.members.push_back({generator_from_json(m.at("gen")), m.at("regret_score").get<Scalar>()});
    w.population.weights = vector_from_json(j.at("population").at("weights"));
    if (!j.at("snapshot").is_null()) {
      ActorCritic snap = w.agent.online;
      actor_critic_from_json(j.at("snapshot").at("model"), snap);
      w.snapshot = make_snapshot(snap, j.at("snapshot").at("stage").get<int>());
    }

    w.stage_buffer = stage_buffer_from_json(j.at("stage_buffer"));
    w.archived_buffer = stage_buffer_from_json(j.at("archived_buffer"));
    w.finals_new = vectors_from_json(j.at("finals_new"));
    w.finals_old = vectors_from_json(j.at("finals_old"));
    for (const auto& s : j.at("history")) w.history.push_back(stats_from_json(s));

    const fs::path rpath = fs::path(path).parent_path() / j.at("replay").get<std::string>();
    w.replay = ReplayBuffer::load(rpath.string());
    return w;
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint '" + path + "' is malformed: " + e.what());
  }
}

}  // namespace rsd
