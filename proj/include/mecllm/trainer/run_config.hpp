#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mecllm/env/config.hpp"
#include "mecllm/ppo/ppo.hpp"
#include "mecllm/wm/rssm.hpp"

namespace mecllm::trainer {

enum class Policy { kWmPpo, kPpo, kAlwaysLocal, kAlwaysOffload };

std::string to_string(Policy p);
Policy policy_from_string(const std::string& name);
bool is_learned(Policy p);

struct RunConfig {
  env::SystemConfig system = env::SystemConfig::defaults(2);
  ppo::PpoConfig ppo;
  wm::WmConfig wm;
  std::size_t iterations = 300;  // one episode each
  Policy policy = Policy::kWmPpo;
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path output_dir = "runs";
  std::size_t eval_episodes = 100;
  std::size_t replay_episodes = 20;      // episodes kept for world-model training
  std::size_t checkpoint_interval = 50;  // iterations; 0 writes only the final checkpoint
  std::vector<std::size_t> compare_mlus{2};

  void validate() const;
};

// Sections: system (object or path relative to base_dir), ppo, world_model,
// trainer. Unknown keys in ppo, world_model and trainer are rejected.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& c);
nlohmann::json to_json(const ppo::PpoConfig& c);
nlohmann::json to_json(const wm::WmConfig& c);

// Copy of system with K MLUs; per-MLU settings repeat the last configured MLU.
// Fixed positions must already list K entries.
env::SystemConfig with_num_mlus(const env::SystemConfig& system, std::size_t k);

// Hash of the canonical JSON without output_dir, seeds and iterations, so a
// run extended with more iterations keeps its hash and can resume.
std::string config_hash(const RunConfig& c);

}  // namespace mecllm::trainer
