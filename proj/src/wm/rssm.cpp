#include "mecllm/wm/rssm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mecllm/diff/checkpoint.hpp"
#include "mecllm/diff/gaussian.hpp"

namespace mecllm::wm {

namespace {

Matrix hcat(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

Matrix softplus_plus(const Matrix& raw, double floor) {
  return raw.unaryExpr([floor](double v) { return diff::softplus(v) + floor; });
}

Matrix sigmoid_of(const Matrix& raw) {
  return raw.unaryExpr([](double v) { return diff::sigmoid(v); });
}

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

struct StepTape {
  diff::GruStepCache gru;
  diff::MlpCache prior, post, dec;
  Matrix h, mu_p, rho_p, sd_p, mu_q, rho_q, sd_q, z, noise;
};

}  // namespace

void WmConfig::validate() const {
  if (n_h == 0 || n_z == 0 || hidden == 0) throw std::invalid_argument("wm: widths must be >= 1");
  if (!(lambda_wm >= 0.0 && lambda_wm <= 1.0)) throw std::invalid_argument("wm: lambda_wm must be in [0, 1]");
  if (horizon == 0) throw std::invalid_argument("wm: horizon must be >= 1");
  if (!(lambda_r >= 0.0) || !(beta_kl >= 0.0) || !(done_weight >= 0.0) || !(eta >= 0.0)) {
    throw std::invalid_argument("wm: loss weights must be >= 0");
  }
  if (!(uncertainty_fraction >= 0.0 && uncertainty_fraction <= 1.0)) {
    throw std::invalid_argument("wm: uncertainty_fraction must be in [0, 1]");
  }
  if (!(min_std > 0.0)) throw std::invalid_argument("wm: min_std must be > 0");
  if (seq_len < 2) throw std::invalid_argument("wm: seq_len must be >= 2");
  if (train_steps == 0 || minibatch == 0) {
    throw std::invalid_argument("wm: train_steps and minibatch must be >= 1");
  }
  if (!(lr > 0.0)) throw std::invalid_argument("wm: lr must be > 0");
}

std::vector<double> gaussian_kl_rows(const Matrix& q_mean, const Matrix& q_std,
                                     const Matrix& p_mean, const Matrix& p_std) {
  if (q_mean.rows() != p_mean.rows() || q_mean.cols() != p_mean.cols() ||
      q_std.rows() != q_mean.rows() || q_std.cols() != q_mean.cols() ||
      p_std.rows() != q_mean.rows() || p_std.cols() != q_mean.cols()) {
    throw std::invalid_argument("gaussian_kl_rows: shape mismatch");
  }
  std::vector<double> out(static_cast<std::size_t>(q_mean.rows()), 0.0);
  for (Eigen::Index i = 0; i < q_mean.rows(); ++i) {
    double kl = 0.0;
    for (Eigen::Index j = 0; j < q_mean.cols(); ++j) {
      const double d = q_mean(i, j) - p_mean(i, j);
      const double vp = p_std(i, j) * p_std(i, j);
      kl += std::log(p_std(i, j) / q_std(i, j)) + (q_std(i, j) * q_std(i, j) + d * d) / (2.0 * vp) - 0.5;
    }
    out[static_cast<std::size_t>(i)] = kl;
  }
  return out;
}

Matrix reparameterize(const Matrix& mean, const Matrix& std, const Matrix& noise) {
  if (mean.rows() != std.rows() || mean.cols() != std.cols() || mean.rows() != noise.rows() ||
      mean.cols() != noise.cols()) {
    throw std::invalid_argument("reparameterize: shape mismatch");
  }
  return mean + std.cwiseProduct(noise);
}

void WmSequence::validate(std::size_t obs_width, std::size_t action_width) const {
  if (obs.empty()) throw std::invalid_argument("WmSequence: sequence length < 1");
  const std::size_t n = obs.size();
  if (actions.size() != n - 1 || rewards.size() != n - 1 || dones.size() != n - 1) {
    throw std::invalid_argument("WmSequence: transition count must be obs count - 1");
  }
  const auto b = obs[0].rows();
  for (const auto& o : obs) {
    if (o.rows() != b || static_cast<std::size_t>(o.cols()) != obs_width) {
      throw std::invalid_argument("WmSequence: observation shape mismatch");
    }
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (actions[k].rows() != b || static_cast<std::size_t>(actions[k].cols()) != action_width ||
        rewards[k].size() != static_cast<std::size_t>(b) || dones[k].size() != static_cast<std::size_t>(b)) {
      throw std::invalid_argument("WmSequence: transition shape mismatch");
    }
  }
}

Rssm::Rssm(std::size_t obs_width, std::size_t action_width, const WmConfig& cfg)
    : obs_width_(obs_width),
      action_width_(action_width),
      cfg_(cfg),
      gru_(diff::RecurrentSpec{cfg.n_z + action_width, cfg.n_h}),
      prior_(diff::MlpSpec::standard(cfg.n_h, 2 * cfg.n_z, cfg.hidden, 1)),
      posterior_(diff::MlpSpec::standard(cfg.n_h + obs_width, 2 * cfg.n_z, cfg.hidden, 1)),
      decoder_(diff::MlpSpec::standard(cfg.n_h + cfg.n_z, obs_width + 2, cfg.hidden, 1)) {
  cfg.validate();
  if (obs_width == 0 || action_width == 0) throw std::invalid_argument("Rssm: widths must be >= 1");
  gru_.collect(params_, "wm.gru");
  prior_.collect(params_, "wm.prior");
  posterior_.collect(params_, "wm.posterior");
  decoder_.collect(params_, "wm.decoder");
}

void Rssm::init(Rng& rng) {
  gru_.init(rng);
  prior_.init(rng);
  posterior_.init(rng);
  decoder_.init(rng);
}

void Rssm::split_gaussian(const Matrix& out, Matrix& mean, Matrix& raw_std, Matrix& std) const {
  const auto nz = static_cast<Eigen::Index>(cfg_.n_z);
  mean = out.leftCols(nz);
  raw_std = out.rightCols(nz);
  std = softplus_plus(raw_std, cfg_.min_std);
}

RssmState Rssm::initial(std::size_t batch) const {
  const auto b = static_cast<Eigen::Index>(batch);
  const auto nz = static_cast<Eigen::Index>(cfg_.n_z);
  RssmState s;
  s.h = Matrix::Zero(b, static_cast<Eigen::Index>(cfg_.n_h));
  s.z = Matrix::Zero(b, nz);
  s.prior_mean = s.post_mean = Matrix::Zero(b, nz);
  s.prior_std = s.post_std = Matrix::Ones(b, nz);
  return s;
}

RssmState Rssm::step(const RssmState& prev, const Matrix& action, const Matrix* obs, Rng* rng) const {
  const auto b = static_cast<Eigen::Index>(prev.rows());
  if (action.rows() != b || static_cast<std::size_t>(action.cols()) != action_width_ ||
      static_cast<std::size_t>(prev.z.cols()) != cfg_.n_z ||
      static_cast<std::size_t>(prev.h.cols()) != cfg_.n_h) {
    throw std::invalid_argument("Rssm::step: shape mismatch");
  }
  if (obs && (obs->rows() != b || static_cast<std::size_t>(obs->cols()) != obs_width_)) {
    throw std::invalid_argument("Rssm::step: observation shape mismatch");
  }
  RssmState s;
  s.h = gru_.forward(hcat(prev.z, action), prev.h);
  Matrix raw;
  split_gaussian(prior_.forward(s.h), s.prior_mean, raw, s.prior_std);
  if (obs) {
    split_gaussian(posterior_.forward(hcat(s.h, *obs)), s.post_mean, raw, s.post_std);
  } else {
    s.post_mean = s.prior_mean;
    s.post_std = s.prior_std;
  }
  s.z = rng ? reparameterize(s.post_mean, s.post_std, standard_normal(b, s.post_mean.cols(), *rng))
            : s.post_mean;
  return s;
}

Decoded Rssm::decode(const RssmState& s) const {
  const Matrix out = decoder_.forward(hcat(s.h, s.z));
  const auto ow = static_cast<Eigen::Index>(obs_width_);
  Decoded d;
  d.obs = out.leftCols(ow);
  d.reward.resize(static_cast<std::size_t>(out.rows()));
  d.done_logit.resize(static_cast<std::size_t>(out.rows()));
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    d.reward[static_cast<std::size_t>(i)] = out(i, ow);
    d.done_logit[static_cast<std::size_t>(i)] = out(i, ow + 1);
  }
  return d;
}

RssmState Rssm::encode(const Matrix& obs, Rng* rng) const {
  const RssmState s0 = initial(static_cast<std::size_t>(obs.rows()));
  return step(s0, Matrix::Zero(obs.rows(), static_cast<Eigen::Index>(action_width_)), &obs, rng);
}

Prediction Rssm::predict_next(const Matrix& states, const Matrix& actions) const {
  if (states.rows() != actions.rows()) throw std::invalid_argument("predict_next: row mismatch");
  const RssmState next = step(encode(states, nullptr), actions, nullptr, nullptr);
  Decoded d = decode(next);
  Prediction p;
  p.next_obs = std::move(d.obs);
  p.reward = std::move(d.reward);
  p.done_prob.resize(d.done_logit.size());
  for (std::size_t i = 0; i < d.done_logit.size(); ++i) p.done_prob[i] = diff::sigmoid(d.done_logit[i]);
  return p;
}

std::vector<double> Rssm::uncertainty(const Matrix& states) const {
  const RssmState s = encode(states, nullptr);
  return gaussian_kl_rows(s.post_mean, s.post_std, s.prior_mean, s.prior_std);
}

WmLoss Rssm::loss(const WmSequence& seq, Rng& rng, bool accumulate) {
  seq.validate(obs_width_, action_width_);
  std::vector<Matrix> noise;
  for (std::size_t k = 0; k < seq.length(); ++k) {
    noise.push_back(standard_normal(static_cast<Eigen::Index>(seq.batch()),
                                    static_cast<Eigen::Index>(cfg_.n_z), rng));
  }
  return loss(seq, noise, accumulate);
}

WmLoss Rssm::loss(const WmSequence& seq, const std::vector<Matrix>& noise, bool accumulate) {
  seq.validate(obs_width_, action_width_);
  const std::size_t len = seq.length();
  if (noise.size() != len) throw std::invalid_argument("Rssm::loss: one noise matrix per step");
  const auto b = static_cast<Eigen::Index>(seq.batch());
  const auto nz = static_cast<Eigen::Index>(cfg_.n_z);
  const auto nh = static_cast<Eigen::Index>(cfg_.n_h);
  const auto ow = static_cast<Eigen::Index>(obs_width_);
  const double n_step = static_cast<double>(b) * static_cast<double>(len);
  const double n_tr = static_cast<double>(b) * static_cast<double>(len - 1);

  std::vector<StepTape> tape(len);
  std::vector<Matrix> d_out(len);
  std::vector<Matrix> kl_mu_q(len), kl_sd_q(len), kl_mu_p(len), kl_sd_p(len);
  WmLoss out;

  Matrix h = Matrix::Zero(b, nh);
  Matrix z = Matrix::Zero(b, nz);
  Matrix a = Matrix::Zero(b, static_cast<Eigen::Index>(action_width_));
  for (std::size_t k = 0; k < len; ++k) {
    StepTape& t = tape[k];
    if (k > 0) a = seq.actions[k - 1];
    if (noise[k].rows() != b || noise[k].cols() != nz) throw std::invalid_argument("Rssm::loss: noise shape");
    t.h = gru_.forward(hcat(z, a), h, &t.gru);
    split_gaussian(prior_.forward(t.h, &t.prior), t.mu_p, t.rho_p, t.sd_p);
    split_gaussian(posterior_.forward(hcat(t.h, seq.obs[k]), &t.post), t.mu_q, t.rho_q, t.sd_q);
    t.noise = noise[k];
    t.z = reparameterize(t.mu_q, t.sd_q, t.noise);
    const Matrix dec = decoder_.forward(hcat(t.h, t.z), &t.dec);

    Matrix& dd = d_out[k];
    dd = Matrix::Zero(b, ow + 2);
    const Matrix diff_o = dec.leftCols(ow) - seq.obs[k];
    out.recon += diff_o.squaredNorm();
    dd.leftCols(ow) = 2.0 * diff_o / n_step;
    if (k > 0) {
      for (Eigen::Index i = 0; i < b; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        const double dr = dec(i, ow) - seq.rewards[k - 1][ii];
        out.reward += dr * dr;
        dd(i, ow) = cfg_.lambda_r * 2.0 * dr / n_tr;
        const double logit = dec(i, ow + 1);
        const double y = seq.dones[k - 1][ii];
        out.done += diff::softplus(logit) - y * logit;
        dd(i, ow + 1) = cfg_.done_weight * (diff::sigmoid(logit) - y) / n_tr;
      }
    }

    const double w = cfg_.beta_kl / n_step;
    for (double v : gaussian_kl_rows(t.mu_q, t.sd_q, t.mu_p, t.sd_p)) out.kl += v;
    const Matrix delta = t.mu_q - t.mu_p;
    const Matrix var_p = t.sd_p.array().square().matrix();
    kl_mu_q[k] = w * delta.cwiseQuotient(var_p);
    kl_mu_p[k] = -kl_mu_q[k];
    kl_sd_q[k] = w * (t.sd_q.cwiseQuotient(var_p) - t.sd_q.cwiseInverse());
    kl_sd_p[k] = w * (t.sd_p.cwiseInverse() -
                      (t.sd_q.array().square() + delta.array().square()).matrix().cwiseQuotient(
                          (var_p.array() * t.sd_p.array()).matrix()));

    h = t.h;
    z = t.z;
  }
  out.recon /= n_step;
  out.kl /= n_step;
  if (len > 1) {
    out.reward /= n_tr;
    out.done /= n_tr;
  }
  out.total = out.recon + cfg_.lambda_r * out.reward + cfg_.beta_kl * out.kl + cfg_.done_weight * out.done;
  if (!accumulate) return out;

  Matrix dh_next = Matrix::Zero(b, nh);
  Matrix dz_next = Matrix::Zero(b, nz);
  for (std::size_t k = len; k-- > 0;) {
    StepTape& t = tape[k];
    const Matrix d_dec_in = decoder_.backward(t.dec, d_out[k]);
    Matrix dh = d_dec_in.leftCols(nh) + dh_next;
    const Matrix dz = d_dec_in.rightCols(nz) + dz_next;

    const Matrix dmu_q = dz + kl_mu_q[k];
    const Matrix dsd_q = dz.cwiseProduct(t.noise) + kl_sd_q[k];
    Matrix d_post(b, 2 * nz);
    d_post << dmu_q, dsd_q.cwiseProduct(sigmoid_of(t.rho_q));
    dh += posterior_.backward(t.post, d_post).leftCols(nh);

    Matrix d_prior(b, 2 * nz);
    d_prior << kl_mu_p[k], kl_sd_p[k].cwiseProduct(sigmoid_of(t.rho_p));
    dh += prior_.backward(t.prior, d_prior);

    auto [dx, dh_prev] = gru_.backward(t.gru, dh);
    dz_next = dx.leftCols(nz);
    dh_next = std::move(dh_prev);
  }
  return out;
}

void Rssm::save(diff::Checkpoint& ckpt, const std::string& prefix) const {
  diff::store_params(ckpt, params_, prefix);
}

void Rssm::load(const diff::Checkpoint& ckpt, const std::string& prefix) {
  diff::restore_params(ckpt, params_, prefix);
}

std::vector<std::size_t> sequence_starts(std::span<const double> dones, std::size_t len) {
  if (len < 2) throw std::invalid_argument("sequence_starts: len must be >= 2");
  std::vector<std::size_t> starts;
  const std::size_t n = dones.size();
  for (std::size_t t = 0; t + len - 1 <= n; ++t) {
    bool ok = true;
    for (std::size_t k = t; k + 2 < t + len; ++k) ok = ok && dones[k] == 0.0;
    if (ok) starts.push_back(t);
  }
  return starts;
}

WmSequence gather_sequences(const Transitions& tr, std::span<const std::size_t> starts,
                            std::size_t len) {
  if (len < 2) throw std::invalid_argument("gather_sequences: len must be >= 2");
  const auto b = static_cast<Eigen::Index>(starts.size());
  WmSequence seq;
  seq.obs.assign(len, Matrix(b, tr.states.cols()));
  seq.actions.assign(len - 1, Matrix(b, tr.actions.cols()));
  seq.rewards.assign(len - 1, std::vector<double>(starts.size()));
  seq.dones.assign(len - 1, std::vector<double>(starts.size()));
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const std::size_t t = starts[i];
    if (t + len - 1 > tr.rewards.size()) throw std::out_of_range("gather_sequences: start too late");
    seq.obs[0].row(ii) = tr.states.row(static_cast<Eigen::Index>(t));
    for (std::size_t k = 0; k + 1 < len; ++k) {
      const auto row = static_cast<Eigen::Index>(t + k);
      seq.obs[k + 1].row(ii) = tr.next_states.row(row);
      seq.actions[k].row(ii) = tr.actions.row(row);
      seq.rewards[k][i] = tr.rewards[t + k];
      seq.dones[k][i] = tr.dones[t + k];
    }
  }
  return seq;
}

WmTrainReport train_world_model(Rssm& model, diff::Adam& opt, const Transitions& tr, Rng& rng) {
  const WmConfig& cfg = model.config();
  const std::vector<std::size_t> starts = sequence_starts(tr.dones, cfg.seq_len);
  WmTrainReport rep;
  if (starts.empty()) return rep;
  std::vector<std::size_t> chosen(cfg.minibatch);
  for (std::size_t step = 0; step < cfg.train_steps; ++step) {
    for (auto& c : chosen) c = starts[rng.index(starts.size())];
    const WmSequence seq = gather_sequences(tr, chosen, cfg.seq_len);
    opt.zero_grad();
    const WmLoss l = model.loss(seq, rng, true);
    opt.step();
    rep.mean.total += l.total;
    rep.mean.recon += l.recon;
    rep.mean.reward += l.reward;
    rep.mean.kl += l.kl;
    rep.mean.done += l.done;
    ++rep.steps;
  }
  const double s = static_cast<double>(rep.steps);
  rep.mean.total /= s;
  rep.mean.recon /= s;
  rep.mean.reward /= s;
  rep.mean.kl /= s;
  rep.mean.done /= s;
  return rep;
}

}  // namespace mecllm::wm
