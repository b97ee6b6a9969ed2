#include "mecllm/trainer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mecllm/core/hash.hpp"
#include "mecllm/diff/checkpoint.hpp"
#include "mecllm/diff/gaussian.hpp"
#include "mecllm/wm/imagination.hpp"
#include "mecllm/wm/value_boost.hpp"

namespace mecllm::trainer {

namespace {

using nlohmann::json;

Matrix row_matrix(std::span<const double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = v[i];
  return m;
}

std::vector<double> row_vector(const Matrix& m, Eigen::Index r = 0) {
  return std::vector<double>(m.row(r).data(), m.row(r).data() + m.cols());
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

Matrix vstack(const std::deque<ppo::Trajectory>& buf, Matrix ppo::Trajectory::*field) {
  Eigen::Index rows = 0;
  for (const auto& t : buf) rows += (t.*field).rows();
  Matrix out(rows, (buf.front().*field).cols());
  Eigen::Index at = 0;
  for (const auto& t : buf) {
    out.middleRows(at, (t.*field).rows()) = t.*field;
    at += (t.*field).rows();
  }
  return out;
}

std::vector<double> concat(const std::deque<ppo::Trajectory>& buf,
                           std::vector<double> ppo::Trajectory::*field) {
  std::vector<double> out;
  for (const auto& t : buf) out.insert(out.end(), (t.*field).begin(), (t.*field).end());
  return out;
}

Tensor vector_tensor(const std::vector<double>& v) { return Tensor({v.size()}, v); }

Matrix tensor_matrix(const Tensor& t) {
  if (t.empty()) return Matrix(0, 0);
  return t.matrix();
}

}  // namespace

Actor stochastic_actor(const diff::GaussianPolicy& policy, Rng& rng) {
  return [&policy, &rng](std::span<const double> obs) {
    const diff::GaussianSample s = policy.sample(row_matrix(obs), rng);
    return ActionSample{row_vector(s.action), row_vector(s.raw), row_vector(s.noise), s.log_prob(0)};
  };
}

Actor mean_actor(const diff::GaussianPolicy& policy) {
  return [&policy](std::span<const double> obs) {
    const Matrix a = policy.mean_action(row_matrix(obs));
    const std::vector<double> unit = row_vector(a);
    return ActionSample{unit, std::vector<double>(unit.size(), 0.0), std::vector<double>(unit.size(), 0.0), 0.0};
  };
}

Actor constant_actor(std::vector<double> unit) {
  return [unit = std::move(unit)](std::span<const double>) {
    return ActionSample{unit, std::vector<double>(unit.size(), 0.0), std::vector<double>(unit.size(), 0.0), 0.0};
  };
}

Collected collect(env::MecEnv& env, const Actor& actor, std::size_t max_steps) {
  Collected c;
  env.reset();
  std::vector<double> obs = env.observe();
  for (std::size_t t = 0; t < max_steps; ++t) {
    const ActionSample a = actor(obs);
    if (a.unit.size() != env.action_width()) throw std::invalid_argument("collect: action width mismatch");
    env::StepOutcome out = env.step(env.action_from_unit(a.unit));
    std::vector<double> next = env.observe();
    c.traj.push(obs, a.unit, a.raw, a.noise, out.reward, out.done, next, a.log_prob, 0.0);
    const bool done = out.done;
    c.outcomes.push_back(std::move(out));
    obs = std::move(next);
    if (done) break;
  }
  return c;
}

EpisodeStats summarize(const std::vector<env::StepOutcome>& outcomes) {
  EpisodeStats s;
  s.steps = outcomes.size();
  if (outcomes.empty()) return s;
  std::size_t pairs = 0, infeasible = 0;
  for (const auto& o : outcomes) {
    s.reward_sum += o.reward;
    if (o.omega.accuracy > 0.0) s.accuracy_violation_rate += 1.0;
    if (o.omega.hallucination > 0.0) s.hallucination_violation_rate += 1.0;
    if (o.omega.energy > 0.0) s.energy_violation_rate += 1.0;
    for (const auto& d : o.mlus) {
      s.latency += d.latency;
      s.accuracy += d.accuracy;
      s.hallucination += d.hallucination;
      s.energy += d.energy();
      s.alpha += d.alpha;
      if (d.infeasible) ++infeasible;
      ++pairs;
    }
  }
  const double n = static_cast<double>(outcomes.size());
  const double p = static_cast<double>(pairs);
  s.reward_mean = s.reward_sum / n;
  s.accuracy_violation_rate /= n;
  s.hallucination_violation_rate /= n;
  s.energy_violation_rate /= n;
  s.latency /= p;
  s.accuracy /= p;
  s.hallucination /= p;
  s.energy /= p;
  s.alpha /= p;
  s.infeasible_rate = static_cast<double>(infeasible) / p;
  return s;
}

MeanSe mean_se(std::span<const double> values) {
  MeanSe r;
  if (values.empty()) return r;
  for (double v : values) r.mean += v;
  const double n = static_cast<double>(values.size());
  r.mean /= n;
  if (values.size() < 2) return r;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return r;
}

EvalReport evaluate(const Actor& actor, const env::SystemConfig& system, std::uint64_t env_seed,
                    std::size_t episodes) {
  env::MecEnv env(system, env_seed);
  EvalReport r;
  std::vector<double> lat, rew, acc, hal, en, al;
  for (std::size_t e = 0; e < episodes; ++e) {
    const EpisodeStats s = summarize(collect(env, actor, system.slots).outcomes);
    r.episodes.push_back(s);
    lat.push_back(s.latency);
    rew.push_back(s.reward_mean);
    acc.push_back(s.accuracy);
    hal.push_back(s.hallucination);
    en.push_back(s.energy);
    al.push_back(s.alpha);
    if (s.accuracy >= system.qos.a_min) r.accuracy_satisfaction += 1.0;
    if (s.hallucination <= system.qos.h_max) r.hallucination_satisfaction += 1.0;
    if (s.accuracy >= system.qos.a_min && s.hallucination <= system.qos.h_max) r.qos_satisfaction += 1.0;
  }
  const double n = static_cast<double>(std::max<std::size_t>(episodes, 1));
  r.accuracy_satisfaction /= n;
  r.hallucination_satisfaction /= n;
  r.qos_satisfaction /= n;
  r.latency = mean_se(lat);
  r.reward = mean_se(rew);
  r.accuracy = mean_se(acc);
  r.hallucination = mean_se(hal);
  r.energy = mean_se(en);
  r.alpha = mean_se(al);
  return r;
}

std::uint64_t evaluation_seed(std::uint64_t seed) {
  return fnv1a64("evaluation:" + std::to_string(seed));
}

std::optional<std::size_t> convergence_iteration(std::span<const double> rewards, std::size_t window,
                                                 double tol) {
  if (window == 0) throw std::invalid_argument("convergence_iteration: window must be >= 1");
  std::vector<double> prefix(rewards.size() + 1, 0.0);
  for (std::size_t i = 0; i < rewards.size(); ++i) prefix[i + 1] = prefix[i] + rewards[i];
  const double w = static_cast<double>(window);
  for (std::size_t end = 2 * window; end <= rewards.size(); ++end) {
    const double now = (prefix[end] - prefix[end - window]) / w;
    const double before = (prefix[end - window] - prefix[end - 2 * window]) / w;
    if (std::abs(now - before) < tol * std::abs(before)) return end;
  }
  return std::nullopt;
}

json to_json(const EpisodeStats& s) {
  return {{"steps", s.steps},
          {"reward_sum", s.reward_sum},
          {"reward_mean", s.reward_mean},
          {"latency_s", s.latency},
          {"accuracy", s.accuracy},
          {"hallucination", s.hallucination},
          {"energy_j", s.energy},
          {"alpha", s.alpha},
          {"accuracy_violation_rate", s.accuracy_violation_rate},
          {"hallucination_violation_rate", s.hallucination_violation_rate},
          {"energy_violation_rate", s.energy_violation_rate},
          {"infeasible_rate", s.infeasible_rate}};
}

json to_json(const EvalReport& r) {
  auto ms = [](const MeanSe& m) { return json{{"mean", m.mean}, {"se", m.se}}; };
  return {{"episodes", r.episodes.size()},
          {"latency_s", ms(r.latency)},
          {"reward", ms(r.reward)},
          {"accuracy", ms(r.accuracy)},
          {"hallucination", ms(r.hallucination)},
          {"energy_j", ms(r.energy)},
          {"alpha", ms(r.alpha)},
          {"accuracy_satisfaction", r.accuracy_satisfaction},
          {"hallucination_satisfaction", r.hallucination_satisfaction},
          {"qos_satisfaction", r.qos_satisfaction}};
}

json to_json(const IterationMetrics& m) {
  json j = to_json(m.episode);
  j["iteration"] = m.iteration;
  j["actor_loss"] = m.ppo.actor_loss;
  j["surrogate_loss"] = m.ppo.surrogate;
  j["entropy"] = m.ppo.entropy;
  j["critic_loss"] = m.ppo.critic_loss;
  j["clip_fraction"] = m.ppo.clip_fraction;
  j["approx_kl"] = m.ppo.approx_kl;
  j["imagination_loss"] = m.ppo.hook_loss;
  j["ppo_steps"] = m.ppo.steps;
  j["wm_loss"] = m.wm.total;
  j["wm_recon"] = m.wm.recon;
  j["wm_reward"] = m.wm.reward;
  j["wm_kl"] = m.wm.kl;
  j["wm_done"] = m.wm.done;
  j["wm_steps"] = m.wm_steps;
  j["imagined_states"] = m.imagined_states;
  return j;
}

Trainer::Trainer(RunConfig config, std::uint64_t seed)
    : cfg_((config.validate(), std::move(config))),
      seed_(seed),
      hash_(config_hash(cfg_)),
      env_(cfg_.system, seed),
      agent_(env_.observation_width(), env_.action_width(), cfg_.ppo),
      model_(env_.observation_width(), env_.action_width(), cfg_.wm),
      model_opt_(model_.params(), {.lr = cfg_.wm.lr}),
      policy_rng_(seed, 11),
      update_rng_(seed, 12),
      model_rng_(seed, 13) {
  Rng init(seed, 10);
  agent_.init(init);
  model_.init(init);
}

IterationMetrics Trainer::train_iteration() {
  IterationMetrics m;
  m.iteration = iteration_ + 1;
  const Actor actor = is_learned(cfg_.policy)
                          ? stochastic_actor(agent_.actor(), policy_rng_)
                          : constant_actor(baseline_unit_action(cfg_.policy, cfg_.system.num_mlus));
  Collected c = collect(env_, actor, cfg_.system.slots);
  m.episode = summarize(c.outcomes);
  if (!is_learned(cfg_.policy)) {
    ++iteration_;
    return m;
  }

  ppo::Trajectory& traj = c.traj;
  traj.values = agent_.values(traj.states);
  const std::vector<double> v_next = agent_.values(traj.next_states);
  std::vector<double> targets;
  ppo::ActorHook hook;
  wm::Imagined imagined;

  if (cfg_.policy == Policy::kWmPpo) {
    replay_.push_back(traj);
    while (replay_.size() > cfg_.replay_episodes) replay_.pop_front();
    const Matrix states = vstack(replay_, &ppo::Trajectory::states);
    const Matrix actions = vstack(replay_, &ppo::Trajectory::actions);
    const Matrix next = vstack(replay_, &ppo::Trajectory::next_states);
    const std::vector<double> rewards = concat(replay_, &ppo::Trajectory::rewards);
    const std::vector<double> dones = concat(replay_, &ppo::Trajectory::dones);
    const wm::WmTrainReport wr =
        wm::train_world_model(model_, model_opt_, wm::Transitions{states, actions, rewards, dones, next}, model_rng_);
    m.wm = wr.mean;
    m.wm_steps = wr.steps;

    const wm::Prediction pred = model_.predict_next(traj.states, traj.actions);
    const std::vector<double> v_model = agent_.values(pred.next_obs);
    targets = wm::boosted_targets(traj.rewards, traj.dones, v_next, pred.reward, v_model, cfg_.ppo.gamma,
                                  cfg_.wm.lambda_wm);

    if (cfg_.wm.eta > 0.0 && cfg_.wm.uncertainty_fraction > 0.0) {
      const std::vector<std::size_t> keep =
          wm::select_low_uncertainty(model_.uncertainty(traj.states), cfg_.wm.uncertainty_fraction);
      if (!keep.empty()) {
        imagined = wm::imagine(model_, gather_rows(traj.states, keep), agent_.actor(), agent_.critic(),
                               cfg_.wm.horizon, cfg_.ppo.gamma, model_rng_);
        m.imagined_states = keep.size();
        hook = [this, &imagined](std::size_t, diff::GaussianPolicy& actor) {
          return wm::imagination_loss(imagined, actor, agent_.critic(), cfg_.wm.eta, true);
        };
      }
    }
  } else {
    targets = ppo::lambda_returns(traj.rewards, v_next, traj.dones, cfg_.ppo.gamma, cfg_.ppo.gae_lambda);
  }

  m.ppo = ppo::update(agent_, ppo::make_batch(traj, targets), cfg_.ppo, update_rng_, hook);
  ++iteration_;
  return m;
}

std::vector<IterationMetrics> Trainer::run(std::size_t iterations) {
  std::vector<IterationMetrics> out;
  out.reserve(iterations);
  for (std::size_t i = 0; i < iterations; ++i) out.push_back(train_iteration());
  return out;
}

Actor Trainer::policy_actor() const {
  if (is_learned(cfg_.policy)) return mean_actor(agent_.actor());
  return constant_actor(baseline_unit_action(cfg_.policy, cfg_.system.num_mlus));
}

EvalReport Trainer::evaluate(std::size_t episodes) const {
  return trainer::evaluate(policy_actor(), cfg_.system, evaluation_seed(seed_), episodes);
}

void Trainer::save(const std::filesystem::path& path) const {
  diff::Checkpoint ck;
  ck.put_meta("trainer.version", std::to_string(kCheckpointVersion));
  ck.put_meta("config_hash", hash_);
  ck.put_meta("seed", std::to_string(seed_));
  ck.put_meta("policy", to_string(cfg_.policy));
  ck.put_meta("iteration", std::to_string(iteration_));
  ck.put_meta("rng.env", env_.rng().serialize());
  ck.put_meta("rng.policy", policy_rng_.serialize());
  ck.put_meta("rng.update", update_rng_.serialize());
  ck.put_meta("rng.model", model_rng_.serialize());
  agent_.save(ck);
  model_.save(ck, "");
  model_opt_.save(ck, "opt.wm");
  ck.put_meta("replay.size", std::to_string(replay_.size()));
  for (std::size_t i = 0; i < replay_.size(); ++i) {
    const std::string p = "replay." + std::to_string(i) + ".";
    const ppo::Trajectory& t = replay_[i];
    ck.put_tensor(p + "states", Tensor::from_matrix(t.states));
    ck.put_tensor(p + "actions", Tensor::from_matrix(t.actions));
    ck.put_tensor(p + "next_states", Tensor::from_matrix(t.next_states));
    ck.put_tensor(p + "rewards", vector_tensor(t.rewards));
    ck.put_tensor(p + "dones", vector_tensor(t.dones));
  }
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  ck.save(path);
}

void Trainer::load(const std::filesystem::path& path) {
  const diff::Checkpoint ck = diff::Checkpoint::load(path);
  if (ck.meta("trainer.version") != std::to_string(kCheckpointVersion)) {
    throw std::runtime_error("checkpoint " + path.string() + ": unsupported trainer version");
  }
  if (ck.meta("config_hash") != hash_ || ck.meta("seed") != std::to_string(seed_)) {
    throw std::runtime_error("checkpoint " + path.string() + " was written by a different config or seed");
  }
  agent_.load(ck);
  model_.load(ck, "");
  model_opt_.load(ck, "opt.wm");
  env_.rng().deserialize(ck.meta("rng.env"));
  policy_rng_.deserialize(ck.meta("rng.policy"));
  update_rng_.deserialize(ck.meta("rng.update"));
  model_rng_.deserialize(ck.meta("rng.model"));
  iteration_ = std::stoull(ck.meta("iteration"));
  replay_.clear();
  const std::size_t n = std::stoull(ck.meta("replay.size"));
  for (std::size_t i = 0; i < n; ++i) {
    const std::string p = "replay." + std::to_string(i) + ".";
    ppo::Trajectory t;
    t.states = tensor_matrix(ck.tensor(p + "states"));
    t.actions = tensor_matrix(ck.tensor(p + "actions"));
    t.next_states = tensor_matrix(ck.tensor(p + "next_states"));
    t.rewards = ck.tensor(p + "rewards").values();
    t.dones = ck.tensor(p + "dones").values();
    replay_.push_back(std::move(t));
  }
}

std::vector<double> baseline_unit_action(Policy p, std::size_t num_mlus) {
  std::vector<double> unit(2 * num_mlus, 0.0);
  if (p == Policy::kAlwaysOffload) {
    std::fill(unit.begin(), unit.end(), 1.0);
  } else if (p != Policy::kAlwaysLocal) {
    throw std::invalid_argument("baseline_unit_action: " + to_string(p) + " is not a static baseline");
  }
  return unit;
}

EvalReport run_baseline(Policy p, const env::SystemConfig& system, std::uint64_t seed, std::size_t episodes) {
  return evaluate(constant_actor(baseline_unit_action(p, system.num_mlus)), system, evaluation_seed(seed),
                  episodes);
}

}  // namespace mecllm::trainer
