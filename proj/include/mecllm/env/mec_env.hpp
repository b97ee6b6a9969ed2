#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mecllm/core/rng.hpp"
#include "mecllm/env/config.hpp"
#include "mecllm/env/qos.hpp"

namespace mecllm::env {

struct MluState {
  double prev_alpha = 0.0;
  double prev_power_w = 0.0;
  double accuracy = 0.0;       // blended accuracy of the previous slot
  double hallucination = 0.0;  // blended hallucination of the previous slot
  double latency_s = 0.0;      // L_k of the previous slot
  double task_bits = 0.0;      // X_k(t)
  double gain = 0.0;           // h_k(t)
};

struct EnvState {
  std::vector<MluState> mlus;
  std::size_t t = 0;
};

struct Action {
  std::vector<double> alpha;    // [0, 1]
  std::vector<double> power_w;  // [0, p_max]
};

struct MluDiagnostics {
  double alpha = 0.0, power_w = 0.0;
  double task_bits = 0.0, gain = 0.0, rate_bps = 0.0;
  double l_local = 0.0, l_off = 0.0, l_mec = 0.0, latency = 0.0;
  double e_local = 0.0, e_off = 0.0;
  double a_local = 0.0, h_local = 0.0;
  double accuracy = 0.0, hallucination = 0.0;
  bool infeasible = false;

  double energy() const { return e_local + e_off; }
};

struct StepOutcome {
  EnvState next_state;
  double reward = 0.0;
  bool done = false;
  std::size_t t = 0;  // slot the outcome belongs to
  std::vector<MluDiagnostics> mlus;
  PenaltyTerms omega;
  double total_latency = 0.0;
};

// Episodic MDP over T slots. Owns its RNG; equal config and seed give
// bit-identical trajectories under equal actions.
class MecEnv {
 public:
  static constexpr std::size_t kFeaturesPerMlu = 7;

  MecEnv(SystemConfig config, std::uint64_t seed);

  const EnvState& reset();
  // Clamps actions to their bounds, then advances one slot.
  StepOutcome step(const Action& action);

  const EnvState& state() const { return state_; }
  const SystemConfig& config() const { return config_; }
  const std::vector<std::pair<double, double>>& positions() const { return positions_; }
  const std::vector<double>& distances() const { return distances_; }

  std::size_t observation_width() const { return kFeaturesPerMlu * config_.num_mlus; }
  std::size_t action_width() const { return 2 * config_.num_mlus; }

  // Per MLU: prev alpha, prev p / p_max, accuracy, hallucination, latency,
  // X / 1e6, scaled gain in dB relative to g0.
  std::vector<double> observe() const;
  static std::vector<double> observe(const EnvState& s, const SystemConfig& c);

  // Maps unit-cube policy outputs [alpha_1..K, power fraction_1..K] to an Action.
  Action action_from_unit(std::span<const double> unit) const;

  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

 private:
  double draw_task_bits();
  double draw_gain(std::size_t k);

  SystemConfig config_;
  Rng rng_;
  EnvState state_;
  std::vector<std::pair<double, double>> positions_;
  std::vector<double> distances_;
};

}  // namespace mecllm::env
