#pragma once

#include <span>
#include <vector>

#include "mecllm/core/rng.hpp"
#include "mecllm/core/tensor.hpp"
#include "mecllm/diff/adam.hpp"
#include "mecllm/diff/gru.hpp"
#include "mecllm/diff/mlp.hpp"

namespace mecllm::diff {
class Checkpoint;
}

namespace mecllm::wm {

struct WmConfig {
  std::size_t n_h = 256;
  std::size_t n_z = 32;
  std::size_t hidden = 256;  // width of the prior, posterior and decoder MLPs
  double lambda_r = 1.0;
  double beta_kl = 1.0;
  double done_weight = 1.0;
  double lambda_wm = 0.5;
  std::size_t horizon = 3;
  double eta = 0.3;
  double uncertainty_fraction = 0.25;
  double min_std = 0.1;
  std::size_t seq_len = 4;  // observations per training sequence
  std::size_t train_steps = 8;  // minibatch updates per training call
  std::size_t minibatch = 32;
  double lr = 1e-3;

  void validate() const;
};

// Batch-major latent state; every matrix has one row per batch element.
struct RssmState {
  Matrix h, z;
  Matrix prior_mean, prior_std;
  Matrix post_mean, post_std;  // equal to the prior when no observation was given
  std::size_t rows() const { return static_cast<std::size_t>(h.rows()); }
};

// Closed-form KL(q || p) for diagonal Gaussians, summed over columns per row.
std::vector<double> gaussian_kl_rows(const Matrix& q_mean, const Matrix& q_std,
                                     const Matrix& p_mean, const Matrix& p_std);

// z = mean + std * noise.
Matrix reparameterize(const Matrix& mean, const Matrix& std, const Matrix& noise);

// Time-major batch of sequences: obs has seq_len entries, the rest seq_len - 1.
// actions[k], rewards[k], dones[k] describe the transition obs[k] -> obs[k + 1].
struct WmSequence {
  std::vector<Matrix> obs;
  std::vector<Matrix> actions;
  std::vector<std::vector<double>> rewards;
  std::vector<std::vector<double>> dones;
  std::size_t length() const { return obs.size(); }
  std::size_t batch() const { return obs.empty() ? 0 : static_cast<std::size_t>(obs[0].rows()); }
  void validate(std::size_t obs_width, std::size_t action_width) const;
};

struct WmLoss {
  double total = 0.0;
  double recon = 0.0;   // mean over (batch, step) of |o_hat - o|^2
  double reward = 0.0;  // mean over (batch, transition) of (r_hat - r)^2
  double kl = 0.0;      // mean over (batch, step) of KL(post || prior)
  double done = 0.0;    // mean binary cross-entropy of the done head
};

struct Decoded {
  Matrix obs;
  std::vector<double> reward;
  std::vector<double> done_logit;
};

struct Prediction {
  Matrix next_obs;
  std::vector<double> reward;
  std::vector<double> done_prob;
};

// Recurrent state-space model over flat env observations:
//   h_k = GRU([z_{k-1}, a_{k-1}], h_{k-1}), prior p(z|h_k), posterior q(z|h_k, o_k),
//   decoder([h_k, z_k]) -> (o_k, r_{k-1}, d_{k-1}).
// Sequences start from h = 0, z = 0, a = 0, so the first step encodes o_0 alone.
class Rssm {
 public:
  Rssm(std::size_t obs_width, std::size_t action_width, const WmConfig& cfg);
  Rssm(const Rssm&) = delete;
  Rssm& operator=(const Rssm&) = delete;

  void init(Rng& rng);

  RssmState initial(std::size_t batch) const;
  // Posterior sample when obs is given, prior sample otherwise. A null rng
  // selects the mean instead of sampling.
  RssmState step(const RssmState& prev, const Matrix& action, const Matrix* obs, Rng* rng) const;
  Decoded decode(const RssmState& s) const;

  // First step from the initial state with observation obs.
  RssmState encode(const Matrix& obs, Rng* rng) const;

  // Evaluation mode: latent means throughout; deterministic.
  Prediction predict_next(const Matrix& states, const Matrix& actions) const;

  // Posterior-prior KL after encoding each state; the uncertainty proxy.
  std::vector<double> uncertainty(const Matrix& states) const;

  // noise[k] is (batch, n_z). Accumulates grads into params() when requested.
  WmLoss loss(const WmSequence& seq, const std::vector<Matrix>& noise, bool accumulate);
  WmLoss loss(const WmSequence& seq, Rng& rng, bool accumulate);

  std::size_t obs_width() const { return obs_width_; }
  std::size_t action_width() const { return action_width_; }
  const WmConfig& config() const { return cfg_; }

  diff::GruCell& gru() { return gru_; }
  diff::Mlp& prior_net() { return prior_; }
  diff::Mlp& posterior_net() { return posterior_; }
  diff::Mlp& decoder() { return decoder_; }
  const diff::ParamList& params() const { return params_; }

  void save(diff::Checkpoint& ckpt, const std::string& prefix) const;
  void load(const diff::Checkpoint& ckpt, const std::string& prefix);

 private:
  void split_gaussian(const Matrix& out, Matrix& mean, Matrix& raw_std, Matrix& std) const;

  std::size_t obs_width_, action_width_;
  WmConfig cfg_;
  diff::GruCell gru_;
  diff::Mlp prior_, posterior_, decoder_;
  diff::ParamList params_;
};

// Flat transitions, row-aligned.
struct Transitions {
  const Matrix& states;
  const Matrix& actions;
  std::span<const double> rewards;
  std::span<const double> dones;
  const Matrix& next_states;
};

// Rows t such that transitions t .. t + len - 2 exist and none but the last is terminal.
std::vector<std::size_t> sequence_starts(std::span<const double> dones, std::size_t len);
WmSequence gather_sequences(const Transitions& tr, std::span<const std::size_t> starts,
                            std::size_t len);

struct WmTrainReport {
  WmLoss mean;  // averaged over minibatch steps
  std::size_t steps = 0;
};

// cfg.train_steps updates, each on cfg.minibatch sequence starts drawn
// uniformly with replacement.
WmTrainReport train_world_model(Rssm& model, diff::Adam& opt, const Transitions& tr, Rng& rng);

}  // namespace mecllm::wm
