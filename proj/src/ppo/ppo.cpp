#include "mecllm/ppo/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mecllm/diff/checkpoint.hpp"

namespace mecllm::ppo {

namespace {

void append_row(Matrix& m, std::span<const double> row) {
  if (m.rows() == 0) {
    m.resize(0, static_cast<Eigen::Index>(row.size()));
  } else if (static_cast<std::size_t>(m.cols()) != row.size()) {
    throw std::invalid_argument("Trajectory::push: row width changed");
  }
  m.conservativeResize(m.rows() + 1, Eigen::NoChange);
  for (std::size_t j = 0; j < row.size(); ++j) m(m.rows() - 1, static_cast<Eigen::Index>(j)) = row[j];
}

void check_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

Matrix gather(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

std::vector<double> gather(std::span<const double> v, std::span<const std::size_t> idx) {
  std::vector<double> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

}  // namespace

void PpoConfig::validate() const {
  if (!(clip > 0.0)) throw std::invalid_argument("ppo: clip must be > 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("ppo: gamma must be in [0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw std::invalid_argument("ppo: gae_lambda must be in [0, 1]");
  }
  if (epochs == 0) throw std::invalid_argument("ppo: epochs must be >= 1");
  if (minibatch == 0) throw std::invalid_argument("ppo: minibatch must be >= 1");
  if (!(entropy_coeff >= 0.0)) throw std::invalid_argument("ppo: entropy_coeff must be >= 0");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) {
    throw std::invalid_argument("ppo: learning rates must be > 0");
  }
  if (hidden == 0 || depth == 0) throw std::invalid_argument("ppo: hidden and depth must be >= 1");
  if (!std::isfinite(init_log_std)) throw std::invalid_argument("ppo: init_log_std not finite");
}

void Trajectory::push(std::span<const double> state, std::span<const double> action,
                      std::span<const double> raw_sample, std::span<const double> noise_sample,
                      double reward, bool done, std::span<const double> next_state,
                      double log_prob, double value) {
  append_row(states, state);
  append_row(actions, action);
  append_row(raw, raw_sample);
  append_row(noise, noise_sample);
  append_row(next_states, next_state);
  rewards.push_back(reward);
  dones.push_back(done ? 1.0 : 0.0);
  log_probs.push_back(log_prob);
  values.push_back(value);
}

void Trajectory::validate() const {
  const auto n = static_cast<Eigen::Index>(size());
  if (states.rows() != n || actions.rows() != n || raw.rows() != n || noise.rows() != n ||
      next_states.rows() != n || static_cast<Eigen::Index>(dones.size()) != n ||
      static_cast<Eigen::Index>(log_probs.size()) != n ||
      static_cast<Eigen::Index>(values.size()) != n) {
    throw std::invalid_argument("Trajectory: field lengths differ");
  }
  for (double lp : log_probs) {
    if (!std::isfinite(lp)) throw std::invalid_argument("Trajectory: non-finite log-prob");
  }
}

double prob_ratio(double new_log_prob, double old_log_prob) {
  return std::exp(new_log_prob - old_log_prob);
}

SurrogateResult clipped_surrogate(std::span<const double> ratios,
                                  std::span<const double> advantages, double clip) {
  check_same(ratios.size(), advantages.size(), "clipped_surrogate");
  if (ratios.empty()) throw std::invalid_argument("clipped_surrogate: empty batch");
  const double n = static_cast<double>(ratios.size());
  SurrogateResult r;
  r.d_ratio.assign(ratios.size(), 0.0);
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double rho = ratios[i];
    const double a = advantages[i];
    const double c = std::clamp(rho, 1.0 - clip, 1.0 + clip);
    const double unclipped = rho * a;
    const double bounded = c * a;
    if (std::abs(rho - 1.0) > clip) ++clipped;
    if (unclipped <= bounded) {
      r.loss -= unclipped;
      r.d_ratio[i] = -a / n;
    } else {
      r.loss -= bounded;  // constant in rho
    }
  }
  r.loss /= n;
  r.clip_fraction = static_cast<double>(clipped) / n;
  return r;
}

std::vector<double> gae_advantages(std::span<const double> rewards, std::span<const double> values,
                                   std::span<const double> next_values,
                                   std::span<const double> dones, double gamma, double lambda) {
  check_same(rewards.size(), values.size(), "gae_advantages");
  check_same(rewards.size(), next_values.size(), "gae_advantages");
  check_same(rewards.size(), dones.size(), "gae_advantages");
  std::vector<double> adv(rewards.size());
  double next = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    const double live = 1.0 - dones[i];
    const double delta = rewards[i] + gamma * live * next_values[i] - values[i];
    next = delta + gamma * lambda * live * next;
    adv[i] = next;
  }
  return adv;
}

std::vector<double> lambda_returns(std::span<const double> rewards,
                                   std::span<const double> next_values,
                                   std::span<const double> dones, double gamma, double lambda) {
  check_same(rewards.size(), next_values.size(), "lambda_returns");
  check_same(rewards.size(), dones.size(), "lambda_returns");
  std::vector<double> g(rewards.size());
  // The last row bootstraps from V(s') alone.
  double next = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    const double live = 1.0 - dones[i];
    const bool last = i + 1 == rewards.size();
    const double tail = last ? next_values[i] : (1.0 - lambda) * next_values[i] + lambda * next;
    next = rewards[i] + gamma * live * tail;
    g[i] = next;
  }
  return g;
}

std::vector<double> normalize(std::span<const double> v, double eps) {
  if (v.empty()) return {};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  const double sd = std::sqrt(var) + eps;
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean) / sd;
  return out;
}

EntropyEstimate squashed_entropy(const Matrix& mean, std::span<const double> log_std,
                                 const Matrix& noise) {
  if (mean.rows() != noise.rows() || mean.cols() != noise.cols() ||
      static_cast<std::size_t>(mean.cols()) != log_std.size()) {
    throw std::invalid_argument("squashed_entropy: shape mismatch");
  }
  if (mean.rows() == 0) throw std::invalid_argument("squashed_entropy: empty batch");
  const double n = static_cast<double>(mean.rows());
  EntropyEstimate e;
  e.d_mean.resize(mean.rows(), mean.cols());
  e.d_log_std.assign(log_std.size(), 0.0);
  double gaussian = 0.0;
  for (double ls : log_std) gaussian += ls + 0.5 * (1.0 + diff::kLog2Pi);
  double squash = 0.0;
  for (Eigen::Index j = 0; j < mean.cols(); ++j) {
    const double sd = std::exp(log_std[static_cast<std::size_t>(j)]);
    double d_ls = 0.0;
    for (Eigen::Index i = 0; i < mean.rows(); ++i) {
      const double u = mean(i, j) + sd * noise(i, j);
      squash -= diff::softplus(u) + diff::softplus(-u);
      // d/du log sig'(u) = 1 - 2 sig(u)
      const double slope = 1.0 - 2.0 * diff::sigmoid(u);
      e.d_mean(i, j) = slope / n;
      d_ls += slope * sd * noise(i, j);
    }
    e.d_log_std[static_cast<std::size_t>(j)] = 1.0 + d_ls / n;
  }
  e.mean = gaussian + squash / n;
  return e;
}

double entropy_loss(const diff::GaussianPolicy& policy, const Matrix& states, double beta,
                    Rng& rng) {
  if (beta == 0.0) return 0.0;
  const Matrix mean = policy.mean(states);
  Matrix noise(mean.rows(), mean.cols());
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = rng.normal();
  return -beta * squashed_entropy(mean, policy.log_std().data(), noise).mean;
}

CriticLoss critic_loss(std::span<const double> values, std::span<const double> targets) {
  check_same(values.size(), targets.size(), "critic_loss");
  if (values.empty()) throw std::invalid_argument("critic_loss: empty batch");
  const double n = static_cast<double>(values.size());
  CriticLoss c;
  c.d_values.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - targets[i];
    c.value += d * d;
    c.d_values[i] = 2.0 * d / n;
  }
  c.value /= n;
  return c;
}

ActorCritic::ActorCritic(std::size_t state_width, std::size_t action_width, const PpoConfig& cfg)
    : actor_(diff::MlpSpec::standard(state_width, action_width, cfg.hidden, cfg.depth),
             cfg.init_log_std),
      critic_(diff::MlpSpec::standard(state_width, 1, cfg.hidden, cfg.depth)) {
  cfg.validate();
  actor_.collect(actor_params_, "actor");
  critic_.collect(critic_params_, "critic");
  actor_opt_ = diff::Adam(actor_params_, {.lr = cfg.actor_lr});
  critic_opt_ = diff::Adam(critic_params_, {.lr = cfg.critic_lr});
}

void ActorCritic::init(Rng& rng) {
  actor_.init(rng);
  critic_.init(rng);
}

std::vector<double> ActorCritic::values(const Matrix& states) const {
  const Matrix v = critic_.forward(states);
  return std::vector<double>(v.data(), v.data() + v.rows());
}

void ActorCritic::save(diff::Checkpoint& ckpt) const {
  diff::store_params(ckpt, actor_params_, "");
  diff::store_params(ckpt, critic_params_, "");
  actor_opt_.save(ckpt, "opt.actor");
  critic_opt_.save(ckpt, "opt.critic");
}

void ActorCritic::load(const diff::Checkpoint& ckpt) {
  diff::restore_params(ckpt, actor_params_, "");
  diff::restore_params(ckpt, critic_params_, "");
  actor_opt_.load(ckpt, "opt.actor");
  critic_opt_.load(ckpt, "opt.critic");
}

Batch make_batch(const Trajectory& traj, std::span<const double> targets) {
  traj.validate();
  check_same(traj.size(), targets.size(), "make_batch");
  Batch b;
  b.states = traj.states;
  b.raw = traj.raw;
  b.noise = traj.noise;
  b.old_log_probs = traj.log_probs;
  b.targets.assign(targets.begin(), targets.end());
  b.advantages.resize(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) b.advantages[i] = targets[i] - traj.values[i];
  return b;
}

ActorLoss actor_loss(diff::GaussianPolicy& actor, const Matrix& states, const Matrix& raw,
                     const Matrix& noise, std::span<const double> old_log_probs,
                     std::span<const double> advantages, const PpoConfig& cfg, bool accumulate) {
  diff::MlpCache cache;
  const Matrix mean = actor.mean(states, accumulate ? &cache : nullptr);
  const std::span<const double> log_std = actor.log_std().data();
  const Eigen::VectorXd new_lp = diff::squashed_log_prob(raw, mean, log_std);
  check_same(static_cast<std::size_t>(new_lp.size()), old_log_probs.size(), "actor_loss");

  std::vector<double> ratios(old_log_probs.size());
  double kl = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    ratios[i] = prob_ratio(new_lp(ii), old_log_probs[i]);
    kl += old_log_probs[i] - new_lp(ii);
  }
  const SurrogateResult sur = clipped_surrogate(ratios, advantages, cfg.clip);
  const EntropyEstimate ent = squashed_entropy(mean, log_std, noise);

  ActorLoss out;
  out.surrogate = sur.loss;
  out.entropy = ent.mean;
  out.total = sur.loss - cfg.entropy_coeff * ent.mean;
  out.clip_fraction = sur.clip_fraction;
  out.approx_kl = kl / static_cast<double>(ratios.size());
  if (!accumulate) return out;

  const diff::LogProbGrad g = diff::squashed_log_prob_grad(raw, mean, log_std);
  Matrix d_mean = -cfg.entropy_coeff * ent.d_mean;
  std::vector<double> d_log_std(log_std.size());
  for (std::size_t j = 0; j < log_std.size(); ++j) d_log_std[j] = -cfg.entropy_coeff * ent.d_log_std[j];
  for (Eigen::Index i = 0; i < mean.rows(); ++i) {
    // d loss / d logp_i = d loss / d ratio_i * ratio_i
    const double d_lp = sur.d_ratio[static_cast<std::size_t>(i)] * ratios[static_cast<std::size_t>(i)];
    if (d_lp == 0.0) continue;
    for (Eigen::Index j = 0; j < mean.cols(); ++j) {
      d_mean(i, j) += d_lp * g.d_mean(i, j);
      d_log_std[static_cast<std::size_t>(j)] += d_lp * g.d_log_std(i, j);
    }
  }
  actor.backward(cache, d_mean, d_log_std);
  return out;
}

UpdateReport update(ActorCritic& ac, const Batch& batch, const PpoConfig& cfg, Rng& shuffle_rng,
                    const ActorHook& hook) {
  cfg.validate();
  const std::size_t n = batch.size();
  if (n == 0) throw std::invalid_argument("ppo::update: empty batch");
  const auto rows = static_cast<Eigen::Index>(n);
  if (batch.states.rows() != rows || batch.raw.rows() != rows || batch.noise.rows() != rows ||
      batch.old_log_probs.size() != n || batch.advantages.size() != n) {
    throw std::invalid_argument("ppo::update: batch fields differ in length");
  }
  const std::vector<double> adv =
      cfg.normalize_advantages ? normalize(batch.advantages) : batch.advantages;

  UpdateReport rep;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<std::size_t> perm = shuffle_rng.permutation(n);
    for (std::size_t start = 0; start < n; start += cfg.minibatch) {
      const std::size_t stop = std::min(n, start + cfg.minibatch);
      const std::span<const std::size_t> idx(perm.data() + start, stop - start);
      const Matrix states = gather(batch.states, idx);

      ac.actor_opt().zero_grad();
      const ActorLoss al = actor_loss(ac.actor(), states, gather(batch.raw, idx),
                                      gather(batch.noise, idx), gather(batch.old_log_probs, idx),
                                      gather(adv, idx), cfg, true);
      double extra = 0.0;
      if (hook) extra = hook(rep.steps, ac.actor());
      ac.actor_opt().step();

      ac.critic_opt().zero_grad();
      diff::MlpCache cache;
      const Matrix v = ac.critic().forward(states, &cache);
      const std::vector<double> targets = gather(batch.targets, idx);
      const CriticLoss cl =
          critic_loss(std::span<const double>(v.data(), static_cast<std::size_t>(v.rows())), targets);
      ac.critic().backward(cache, ConstMatrixMap(cl.d_values.data(), v.rows(), 1));
      ac.critic_opt().step();

      rep.actor_loss += al.total + extra;
      rep.surrogate += al.surrogate;
      rep.entropy += al.entropy;
      rep.clip_fraction += al.clip_fraction;
      rep.approx_kl += al.approx_kl;
      rep.hook_loss += extra;
      rep.critic_loss += cl.value;
      ++rep.steps;
    }
  }
  const double s = static_cast<double>(rep.steps);
  rep.actor_loss /= s;
  rep.surrogate /= s;
  rep.entropy /= s;
  rep.clip_fraction /= s;
  rep.approx_kl /= s;
  rep.hook_loss /= s;
  rep.critic_loss /= s;
  return rep;
}

}  // namespace mecllm::ppo
