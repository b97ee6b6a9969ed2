#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "mecllm/core/rng.hpp"
#include "mecllm/diff/adam.hpp"
#include "mecllm/env/mec_env.hpp"
#include "mecllm/ppo/ppo.hpp"
#include "mecllm/trainer/run_config.hpp"
#include "mecllm/wm/rssm.hpp"

namespace mecllm::trainer {

struct ActionSample {
  std::vector<double> unit;  // [alpha_1..K, power fraction_1..K] in [0, 1]
  std::vector<double> raw;
  std::vector<double> noise;
  double log_prob = 0.0;
};

using Actor = std::function<ActionSample(std::span<const double> observation)>;

// Draws from the squashed Gaussian policy using rng.
Actor stochastic_actor(const diff::GaussianPolicy& policy, Rng& rng);
// sigmoid(mean); deterministic.
Actor mean_actor(const diff::GaussianPolicy& policy);
// Returns the same unit action every step; raw, noise and log-prob are zero.
Actor constant_actor(std::vector<double> unit);

struct Collected {
  ppo::Trajectory traj;  // values left at zero
  std::vector<env::StepOutcome> outcomes;
};

// Resets env and runs until done or max_steps transitions.
Collected collect(env::MecEnv& env, const Actor& actor, std::size_t max_steps);

struct EpisodeStats {
  std::size_t steps = 0;
  double reward_sum = 0.0;
  double reward_mean = 0.0;
  double latency = 0.0;        // mean per-MLU latency L_k (s)
  double accuracy = 0.0;       // mean blended accuracy
  double hallucination = 0.0;  // mean blended hallucination
  double energy = 0.0;         // mean per-MLU energy (J)
  double alpha = 0.0;          // mean offloading ratio
  double accuracy_violation_rate = 0.0;  // share of slots with a nonzero accuracy hinge
  double hallucination_violation_rate = 0.0;
  double energy_violation_rate = 0.0;
  double infeasible_rate = 0.0;  // share of (slot, MLU) pairs hitting the slot cap
};

EpisodeStats summarize(const std::vector<env::StepOutcome>& outcomes);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // sample standard deviation / sqrt(n); 0 for n = 1
};
MeanSe mean_se(std::span<const double> values);

struct EvalReport {
  std::vector<EpisodeStats> episodes;
  MeanSe latency, reward, accuracy, hallucination, energy, alpha;
  double accuracy_satisfaction = 0.0;       // share of episodes with mean accuracy >= A_min
  double hallucination_satisfaction = 0.0;  // share with mean hallucination <= H_max
  double qos_satisfaction = 0.0;            // both
};

// episodes rollouts on a fresh env seeded with env_seed.
EvalReport evaluate(const Actor& actor, const env::SystemConfig& system, std::uint64_t env_seed,
                    std::size_t episodes);

// Evaluation env seed derived from a training seed; shared by all policies.
std::uint64_t evaluation_seed(std::uint64_t seed);

nlohmann::json to_json(const EpisodeStats& s);
nlohmann::json to_json(const EvalReport& r);

// First 1-based iteration i >= 2 * window whose trailing window-mean reward is
// within tol (relative) of the window-mean ending window iterations earlier.
// Reporting only; training never stops on it.
std::optional<std::size_t> convergence_iteration(std::span<const double> rewards, std::size_t window = 20,
                                                 double tol = 0.01);

struct IterationMetrics {
  std::size_t iteration = 0;  // 1-based
  EpisodeStats episode;
  ppo::UpdateReport ppo;
  wm::WmLoss wm;
  std::size_t wm_steps = 0;
  std::size_t imagined_states = 0;
};

nlohmann::json to_json(const IterationMetrics& m);

// Owns env, networks, optimizers and RNG streams for one seed. Streams:
// env (seed, 0), init (seed, 10), policy sampling (seed, 11), PPO shuffling
// (seed, 12), world model (seed, 13).
class Trainer {
 public:
  static constexpr std::uint32_t kCheckpointVersion = 1;

  Trainer(RunConfig config, std::uint64_t seed);
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  // One episode of collection followed by the update steps of the policy.
  IterationMetrics train_iteration();
  std::vector<IterationMetrics> run(std::size_t iterations);

  // Deterministic policy for learned runs, the fixed action for baselines.
  Actor policy_actor() const;
  EvalReport evaluate(std::size_t episodes) const;

  std::size_t iteration() const { return iteration_; }
  std::uint64_t seed() const { return seed_; }
  const RunConfig& config() const { return cfg_; }
  const std::string& hash() const { return hash_; }

  ppo::ActorCritic& agent() { return agent_; }
  wm::Rssm& world_model() { return model_; }
  env::MecEnv& env() { return env_; }

  void save(const std::filesystem::path& path) const;
  // Requires a trainer built from the same config and seed.
  void load(const std::filesystem::path& path);

 private:
  RunConfig cfg_;
  std::uint64_t seed_;
  std::string hash_;
  env::MecEnv env_;
  ppo::ActorCritic agent_;
  wm::Rssm model_;
  diff::Adam model_opt_;
  Rng policy_rng_, update_rng_, model_rng_;
  std::deque<ppo::Trajectory> replay_;
  std::size_t iteration_ = 0;
};

// Unit action of a static baseline: always-local (alpha 0, power 0) or
// always-offload (alpha 1, power P_max).
std::vector<double> baseline_unit_action(Policy p, std::size_t num_mlus);

// Evaluates a static baseline with the shared evaluation seed.
EvalReport run_baseline(Policy p, const env::SystemConfig& system, std::uint64_t seed,
                        std::size_t episodes);

}  // namespace mecllm::trainer
