#include "mecllm/wm/imagination.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mecllm::wm {

std::vector<std::size_t> select_low_uncertainty(std::span<const double> scores, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("select_low_uncertainty: fraction must be in [0, 1]");
  }
  for (double s : scores) {
    if (std::isnan(s)) throw std::invalid_argument("select_low_uncertainty: NaN score");
  }
  const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(scores.size())));
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  idx.resize(std::min(keep, idx.size()));
  return idx;
}

std::vector<std::size_t> select_low_uncertainty(const RssmState& states, double fraction) {
  return select_low_uncertainty(
      gaussian_kl_rows(states.post_mean, states.post_std, states.prior_mean, states.prior_std), fraction);
}

Imagined imagine(const Rssm& model, const Matrix& start_states, const diff::GaussianPolicy& actor,
                 const diff::Mlp& critic, std::size_t horizon, double gamma, Rng& rng) {
  if (horizon == 0) throw std::invalid_argument("imagine: horizon must be >= 1");
  Imagined im;
  if (start_states.rows() == 0) return im;
  if (static_cast<std::size_t>(start_states.cols()) != model.obs_width()) {
    throw std::invalid_argument("imagine: start state width mismatch");
  }
  const auto b = static_cast<std::size_t>(start_states.rows());
  RssmState latent = model.encode(start_states, nullptr);
  Matrix obs = start_states;
  std::vector<double> g(b, 0.0);
  double discount = 1.0;
  for (std::size_t j = 0; j < horizon; ++j) {
    const diff::GaussianSample a = actor.sample(obs, rng);
    latent = model.step(latent, a.action, nullptr, &rng);
    Decoded d = model.decode(latent);
    for (std::size_t i = 0; i < b; ++i) g[i] += discount * d.reward[i];
    discount *= gamma;
    im.states.push_back(obs);
    im.raw.push_back(a.raw);
    im.noise.push_back(a.noise);
    im.rewards.push_back(std::move(d.reward));
    obs = std::move(d.obs);
  }
  const Matrix v = critic.forward(obs);
  for (std::size_t i = 0; i < b; ++i) g[i] += discount * v(static_cast<Eigen::Index>(i), 0);
  im.final_states = std::move(obs);
  im.returns = std::move(g);
  return im;
}

std::vector<double> imagination_coefficients(const Imagined& im, const diff::Mlp& critic) {
  std::vector<double> c;
  c.reserve(im.horizon() * im.batch());
  for (const Matrix& s : im.states) {
    const Matrix v = critic.forward(s);
    for (std::size_t i = 0; i < im.batch(); ++i) c.push_back(im.returns[i] - v(static_cast<Eigen::Index>(i), 0));
  }
  return c;
}

double imagination_loss(const Imagined& im, std::span<const double> coefficients,
                        diff::GaussianPolicy& actor, double eta, bool accumulate) {
  if (im.empty() || eta == 0.0) return 0.0;
  const std::size_t b = im.batch();
  if (coefficients.size() != im.horizon() * b) {
    throw std::invalid_argument("imagination_loss: one coefficient per imagined step");
  }
  const double n = static_cast<double>(coefficients.size());
  const std::span<const double> log_std = actor.log_std().data();
  double loss = 0.0;
  for (std::size_t j = 0; j < im.horizon(); ++j) {
    diff::MlpCache cache;
    const Matrix mean = actor.mean(im.states[j], accumulate ? &cache : nullptr);
    const Eigen::VectorXd lp = diff::squashed_log_prob(im.raw[j], mean, log_std);
    for (std::size_t i = 0; i < b; ++i) loss -= coefficients[j * b + i] * lp(static_cast<Eigen::Index>(i));
    if (!accumulate) continue;
    const diff::LogProbGrad g = diff::squashed_log_prob_grad(im.raw[j], mean, log_std);
    Matrix d_mean(mean.rows(), mean.cols());
    std::vector<double> d_log_std(log_std.size(), 0.0);
    for (Eigen::Index i = 0; i < mean.rows(); ++i) {
      const double w = -eta * coefficients[j * b + static_cast<std::size_t>(i)] / n;
      d_mean.row(i) = w * g.d_mean.row(i);
      for (Eigen::Index k = 0; k < mean.cols(); ++k) d_log_std[static_cast<std::size_t>(k)] += w * g.d_log_std(i, k);
    }
    actor.backward(cache, d_mean, d_log_std);
  }
  return eta * loss / n;
}

double imagination_loss(const Imagined& im, diff::GaussianPolicy& actor, const diff::Mlp& critic,
                        double eta, bool accumulate) {
  if (im.empty() || eta == 0.0) return 0.0;
  return imagination_loss(im, imagination_coefficients(im, critic), actor, eta, accumulate);
}

}  // namespace mecllm::wm
