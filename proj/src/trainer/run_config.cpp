#include "mecllm/trainer/run_config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "mecllm/core/hash.hpp"

namespace mecllm::trainer {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& section) {
  if (!j.is_object()) throw std::invalid_argument("config: section '" + section + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("config: unknown key '" + section + "." + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

ppo::PpoConfig ppo_from_json(const json& j) {
  reject_unknown(j,
                 {"clip", "gamma", "epochs", "entropy_coeff", "gae_lambda", "minibatch",
                  "normalize_advantages", "actor_lr", "critic_lr", "hidden", "depth", "init_log_std"},
                 "ppo");
  ppo::PpoConfig c;
  read(j, "clip", c.clip);
  read(j, "gamma", c.gamma);
  read(j, "epochs", c.epochs);
  read(j, "entropy_coeff", c.entropy_coeff);
  read(j, "gae_lambda", c.gae_lambda);
  read(j, "minibatch", c.minibatch);
  read(j, "normalize_advantages", c.normalize_advantages);
  read(j, "actor_lr", c.actor_lr);
  read(j, "critic_lr", c.critic_lr);
  read(j, "hidden", c.hidden);
  read(j, "depth", c.depth);
  read(j, "init_log_std", c.init_log_std);
  return c;
}

wm::WmConfig wm_from_json(const json& j) {
  reject_unknown(j,
                 {"n_h", "n_z", "hidden", "lambda_r", "beta_kl", "done_weight", "lambda_wm", "horizon",
                  "eta", "uncertainty_fraction", "min_std", "seq_len", "train_steps", "minibatch", "lr"},
                 "world_model");
  wm::WmConfig c;
  read(j, "n_h", c.n_h);
  read(j, "n_z", c.n_z);
  read(j, "hidden", c.hidden);
  read(j, "lambda_r", c.lambda_r);
  read(j, "beta_kl", c.beta_kl);
  read(j, "done_weight", c.done_weight);
  read(j, "lambda_wm", c.lambda_wm);
  read(j, "horizon", c.horizon);
  read(j, "eta", c.eta);
  read(j, "uncertainty_fraction", c.uncertainty_fraction);
  read(j, "min_std", c.min_std);
  read(j, "seq_len", c.seq_len);
  read(j, "train_steps", c.train_steps);
  read(j, "minibatch", c.minibatch);
  read(j, "lr", c.lr);
  return c;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path.string());
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("cannot parse " + path.string() + ": " + e.what());
  }
}

}  // namespace

std::string to_string(Policy p) {
  switch (p) {
    case Policy::kWmPpo: return "wm-ppo";
    case Policy::kPpo: return "ppo";
    case Policy::kAlwaysLocal: return "always-local";
    case Policy::kAlwaysOffload: return "always-offload";
  }
  throw std::logic_error("unknown policy");
}

Policy policy_from_string(const std::string& name) {
  for (Policy p : {Policy::kWmPpo, Policy::kPpo, Policy::kAlwaysLocal, Policy::kAlwaysOffload}) {
    if (to_string(p) == name) return p;
  }
  throw std::invalid_argument("unknown policy '" + name +
                              "' (expected wm-ppo, ppo, always-local or always-offload)");
}

bool is_learned(Policy p) { return p == Policy::kWmPpo || p == Policy::kPpo; }

void RunConfig::validate() const {
  system.validate();
  ppo.validate();
  wm.validate();
  if (iterations < 1) throw std::invalid_argument("config: iterations must be >= 1");
  if (seeds.empty()) throw std::invalid_argument("config: seeds must be non-empty");
  if (eval_episodes < 1) throw std::invalid_argument("config: eval_episodes must be >= 1");
  if (replay_episodes < 1) throw std::invalid_argument("config: replay_episodes must be >= 1");
  if (compare_mlus.empty()) throw std::invalid_argument("config: compare_mlus must be non-empty");
  for (std::size_t k : compare_mlus) {
    if (k < 1) throw std::invalid_argument("config: compare_mlus entries must be >= 1");
  }
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, {"system", "ppo", "world_model", "trainer"}, "root");
  RunConfig c;
  if (j.contains("system")) {
    const json& s = j.at("system");
    if (s.is_string()) {
      const std::filesystem::path p = base_dir / s.get<std::string>();
      c.system = env::system_config_from_json(read_json_file(p), p.parent_path());
    } else {
      c.system = env::system_config_from_json(s, base_dir);
    }
  }
  if (j.contains("ppo")) c.ppo = ppo_from_json(j.at("ppo"));
  if (j.contains("world_model")) c.wm = wm_from_json(j.at("world_model"));
  if (j.contains("trainer")) {
    const json& t = j.at("trainer");
    reject_unknown(t,
                   {"iterations", "policy", "seeds", "output_dir", "eval_episodes", "replay_episodes",
                    "checkpoint_interval", "compare_mlus"},
                   "trainer");
    read(t, "iterations", c.iterations);
    if (t.contains("policy")) c.policy = policy_from_string(t.at("policy").get<std::string>());
    read(t, "seeds", c.seeds);
    if (t.contains("output_dir")) c.output_dir = t.at("output_dir").get<std::string>();
    read(t, "eval_episodes", c.eval_episodes);
    read(t, "replay_episodes", c.replay_episodes);
    read(t, "checkpoint_interval", c.checkpoint_interval);
    read(t, "compare_mlus", c.compare_mlus);
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(read_json_file(path), path.parent_path());
}

json to_json(const ppo::PpoConfig& c) {
  return {{"clip", c.clip},
          {"gamma", c.gamma},
          {"epochs", c.epochs},
          {"entropy_coeff", c.entropy_coeff},
          {"gae_lambda", c.gae_lambda},
          {"minibatch", c.minibatch},
          {"normalize_advantages", c.normalize_advantages},
          {"actor_lr", c.actor_lr},
          {"critic_lr", c.critic_lr},
          {"hidden", c.hidden},
          {"depth", c.depth},
          {"init_log_std", c.init_log_std}};
}

json to_json(const wm::WmConfig& c) {
  return {{"n_h", c.n_h},
          {"n_z", c.n_z},
          {"hidden", c.hidden},
          {"lambda_r", c.lambda_r},
          {"beta_kl", c.beta_kl},
          {"done_weight", c.done_weight},
          {"lambda_wm", c.lambda_wm},
          {"horizon", c.horizon},
          {"eta", c.eta},
          {"uncertainty_fraction", c.uncertainty_fraction},
          {"min_std", c.min_std},
          {"seq_len", c.seq_len},
          {"train_steps", c.train_steps},
          {"minibatch", c.minibatch},
          {"lr", c.lr}};
}

json to_json(const RunConfig& c) {
  return {{"system", env::to_json(c.system)},
          {"ppo", to_json(c.ppo)},
          {"world_model", to_json(c.wm)},
          {"trainer",
           {{"iterations", c.iterations},
            {"policy", to_string(c.policy)},
            {"seeds", c.seeds},
            {"output_dir", c.output_dir.string()},
            {"eval_episodes", c.eval_episodes},
            {"replay_episodes", c.replay_episodes},
            {"checkpoint_interval", c.checkpoint_interval},
            {"compare_mlus", c.compare_mlus}}}};
}

env::SystemConfig with_num_mlus(const env::SystemConfig& system, std::size_t k) {
  env::SystemConfig c = system;
  c.num_mlus = k;
  if (k > 0 && !c.mlus.empty()) c.mlus.resize(k, c.mlus.back());
  if (!c.positions.empty() && c.positions.size() != k) {
    throw std::invalid_argument("config: fixed positions list " + std::to_string(c.positions.size()) +
                                " MLUs, cannot run K = " + std::to_string(k));
  }
  c.validate();
  return c;
}

std::string config_hash(const RunConfig& c) {
  json j = to_json(c);
  j["trainer"].erase("output_dir");
  j["trainer"].erase("seeds");
  j["trainer"].erase("iterations");
  return hex64(fnv1a64(j.dump()));
}

}  // namespace mecllm::trainer
