#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mecllm/core/rng.hpp"
#include "mecllm/core/tensor.hpp"
#include "mecllm/diff/adam.hpp"
#include "mecllm/diff/gaussian.hpp"
#include "mecllm/diff/mlp.hpp"

namespace mecllm::diff {
class Checkpoint;
}

namespace mecllm::ppo {

struct PpoConfig {
  double clip = 0.1;
  double gamma = 0.99;
  std::size_t epochs = 10;
  double entropy_coeff = 1e-3;
  double gae_lambda = 0.95;  // vanilla baseline only
  std::size_t minibatch = 50;
  bool normalize_advantages = true;
  double actor_lr = 1e-5;
  double critic_lr = 1e-5;
  std::size_t hidden = 256;
  std::size_t depth = 2;
  double init_log_std = -0.5;

  void validate() const;
};

// Row-aligned rollout storage. actions are squashed values in [0, 1]; raw and
// noise are the pre-squash sample and its standard-normal draw.
struct Trajectory {
  Matrix states, actions, raw, noise, next_states;
  std::vector<double> rewards, dones, log_probs, values;

  std::size_t size() const { return rewards.size(); }
  bool empty() const { return rewards.empty(); }
  void push(std::span<const double> state, std::span<const double> action,
            std::span<const double> raw_sample, std::span<const double> noise_sample, double reward,
            bool done, std::span<const double> next_state, double log_prob, double value);
  // Throws unless all fields have equal length and log-probs are finite.
  void validate() const;
};

double prob_ratio(double new_log_prob, double old_log_prob);

struct SurrogateResult {
  double loss = 0.0;
  std::vector<double> d_ratio;  // d loss / d ratio_i
  double clip_fraction = 0.0;   // share of samples with |ratio - 1| > clip
};

// mean_i -min(r_i A_i, clip(r_i, 1 - eps, 1 + eps) A_i).
SurrogateResult clipped_surrogate(std::span<const double> ratios, std::span<const double> advantages,
                                  double clip);

// Standard recursion delta_t + gamma lambda (1 - d_t) A_{t+1}. Returned raw;
// update() applies the per-batch normalization.
std::vector<double> gae_advantages(std::span<const double> rewards, std::span<const double> values,
                                   std::span<const double> next_values,
                                   std::span<const double> dones, double gamma, double lambda);

// G_t = r_t + gamma (1 - d_t) [(1 - lambda) V(s_{t+1}) + lambda G_{t+1}].
// G_t - V(s_t) equals the GAE advantage; lambda = 0 gives the one-step TD target.
std::vector<double> lambda_returns(std::span<const double> rewards,
                                   std::span<const double> next_values,
                                   std::span<const double> dones, double gamma, double lambda);

// Zero mean, unit (population) standard deviation; eps guards constant input.
std::vector<double> normalize(std::span<const double> v, double eps = 1e-8);

struct EntropyEstimate {
  double mean = 0.0;  // batch mean entropy of the squashed policy
  Matrix d_mean;      // d mean / d policy mean
  std::vector<double> d_log_std;
};

// Per sample: sum_j [log sigma_j + (1 + log 2 pi) / 2] + sum_j log sig'(mu_j + sigma_j eps_j),
// with eps the stored noise (reparameterized squash correction).
EntropyEstimate squashed_entropy(const Matrix& mean, std::span<const double> log_std,
                                 const Matrix& noise);

// -beta * mean entropy over states, using one fresh noise draw per state.
double entropy_loss(const diff::GaussianPolicy& policy, const Matrix& states, double beta, Rng& rng);

struct CriticLoss {
  double value = 0.0;
  std::vector<double> d_values;
};
CriticLoss critic_loss(std::span<const double> values, std::span<const double> targets);

// Policy and value networks with their optimizers. Holds raw pointers into its
// own members, so it is neither copyable nor movable.
class ActorCritic {
 public:
  ActorCritic(std::size_t state_width, std::size_t action_width, const PpoConfig& cfg);
  ActorCritic(const ActorCritic&) = delete;
  ActorCritic& operator=(const ActorCritic&) = delete;

  void init(Rng& rng);

  std::vector<double> values(const Matrix& states) const;

  diff::GaussianPolicy& actor() { return actor_; }
  const diff::GaussianPolicy& actor() const { return actor_; }
  diff::Mlp& critic() { return critic_; }
  const diff::Mlp& critic() const { return critic_; }
  diff::Adam& actor_opt() { return actor_opt_; }
  diff::Adam& critic_opt() { return critic_opt_; }
  const diff::ParamList& actor_params() const { return actor_params_; }
  const diff::ParamList& critic_params() const { return critic_params_; }

  void save(diff::Checkpoint& ckpt) const;
  void load(const diff::Checkpoint& ckpt);

 private:
  diff::GaussianPolicy actor_;
  diff::Mlp critic_;
  diff::ParamList actor_params_, critic_params_;
  diff::Adam actor_opt_, critic_opt_;
};

struct Batch {
  Matrix states, raw, noise;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;  // A_t = y_t - V(s_t)
  std::vector<double> targets;     // y_t
  std::size_t size() const { return targets.size(); }
};

// Builds a batch with A = y - V(s) from a trajectory and its critic targets.
Batch make_batch(const Trajectory& traj, std::span<const double> targets);

struct ActorLoss {
  double total = 0.0;
  double surrogate = 0.0;
  double entropy = 0.0;  // mean entropy estimate
  double clip_fraction = 0.0;
  double approx_kl = 0.0;  // mean(old_logp - new_logp)
};

// Clipped surrogate plus -entropy_coeff * entropy on one minibatch. Gradients
// are accumulated into the actor when accumulate is true.
ActorLoss actor_loss(diff::GaussianPolicy& actor, const Matrix& states, const Matrix& raw,
                     const Matrix& noise, std::span<const double> old_log_probs,
                     std::span<const double> advantages, const PpoConfig& cfg, bool accumulate);

// Extra actor loss term evaluated once per minibatch after the PPO gradients
// and before the optimizer step; returns its loss value.
using ActorHook = std::function<double(std::size_t step, diff::GaussianPolicy& actor)>;

struct UpdateReport {
  double actor_loss = 0.0;
  double surrogate = 0.0;
  double entropy = 0.0;
  double critic_loss = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double hook_loss = 0.0;
  std::size_t steps = 0;
};

// cfg.epochs passes of shuffled minibatches; each minibatch takes one actor
// step then one critic step. Losses are means over all minibatch steps.
UpdateReport update(ActorCritic& ac, const Batch& batch, const PpoConfig& cfg, Rng& shuffle_rng,
                    const ActorHook& hook = {});

}  // namespace mecllm::ppo
