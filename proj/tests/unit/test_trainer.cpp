#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mecllm/trainer/run_config.hpp"
#include "mecllm/trainer/trainer.hpp"

using namespace mecllm;
using namespace mecllm::trainer;

namespace {

RunConfig tiny(Policy p, std::size_t slots = 10) {
  RunConfig c;
  c.system = env::SystemConfig::defaults(2);
  c.system.slots = slots;
  c.policy = p;
  c.ppo.hidden = 16;
  c.ppo.minibatch = 5;
  c.ppo.epochs = 2;
  c.ppo.actor_lr = c.ppo.critic_lr = 1e-3;
  c.wm.n_h = 16;
  c.wm.n_z = 4;
  c.wm.hidden = 16;
  c.wm.train_steps = 2;
  c.wm.minibatch = 4;
  c.eval_episodes = 5;
  return c;
}

double max_abs_diff(const diff::ParamList& a, const diff::ParamList& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i].value->values();
    const auto& y = b[i].value->values();
    REQUIRE(x.size() == y.size());
    for (std::size_t j = 0; j < x.size(); ++j) m = std::max(m, std::abs(x[j] - y[j]));
  }
  return m;
}

std::vector<Tensor> snapshot(const diff::ParamList& ps) {
  std::vector<Tensor> out;
  for (const auto& p : ps) out.push_back(*p.value);
  return out;
}

bool same(const std::vector<Tensor>& a, const diff::ParamList& ps) {
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (!(a[i] == *ps[i].value)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("collect stores the local stub's zero offloading ratio") {
  env::MecEnv env(env::SystemConfig::defaults(2), 3);
  const Collected c = collect(env, constant_actor(baseline_unit_action(Policy::kAlwaysLocal, 2)), 100);
  CHECK(c.traj.size() == 100);
  for (Eigen::Index t = 0; t < c.traj.actions.rows(); ++t) {
    CHECK(c.traj.actions(t, 0) == 0.0);
    CHECK(c.traj.actions(t, 1) == 0.0);
  }
  for (const auto& o : c.outcomes) {
    for (const auto& d : o.mlus) CHECK(d.alpha == 0.0);
  }
  CHECK(c.traj.dones.back() == 1.0);
}

TEST_CASE("one-slot episodes give a single terminal transition") {
  env::SystemConfig s = env::SystemConfig::defaults(2);
  s.slots = 1;
  env::MecEnv env(s, 4);
  const Collected c = collect(env, constant_actor({0.5, 0.5, 0.5, 0.5}), 50);
  REQUIRE(c.traj.size() == 1);
  CHECK(c.traj.dones[0] == 1.0);
}

TEST_CASE("seeded collection replays identically") {
  RunConfig cfg = tiny(Policy::kPpo);
  Trainer a(cfg, 9), b(cfg, 9);
  Rng ra(9, 11), rb(9, 11);
  env::MecEnv ea(cfg.system, 9), eb(cfg.system, 9);
  const Collected ca = collect(ea, stochastic_actor(a.agent().actor(), ra), 10);
  const Collected cb = collect(eb, stochastic_actor(b.agent().actor(), rb), 10);
  CHECK(ca.traj.states == cb.traj.states);
  CHECK(ca.traj.actions == cb.traj.actions);
  CHECK(ca.traj.rewards == cb.traj.rewards);
  CHECK(ca.traj.log_probs == cb.traj.log_probs);
}

TEST_CASE("stored log-probs match the policy density") {
  RunConfig cfg = tiny(Policy::kPpo);
  Trainer t(cfg, 2);
  Rng rng(2, 11);
  env::MecEnv env(cfg.system, 2);
  const Collected c = collect(env, stochastic_actor(t.agent().actor(), rng), 10);
  const Matrix mean = t.agent().actor().mean(c.traj.states, nullptr);
  const Eigen::VectorXd lp =
      diff::squashed_log_prob(c.traj.raw, mean, t.agent().actor().log_std().data());
  for (Eigen::Index i = 0; i < lp.size(); ++i) CHECK(lp[i] == doctest::Approx(c.traj.log_probs[static_cast<std::size_t>(i)]).epsilon(1e-12));
}

TEST_CASE("degenerate knobs reduce world-model PPO to vanilla PPO") {
  RunConfig wm_cfg = tiny(Policy::kWmPpo);
  wm_cfg.wm.lambda_wm = 0.0;
  wm_cfg.wm.eta = 0.0;
  wm_cfg.ppo.gae_lambda = 0.0;
  RunConfig ppo_cfg = wm_cfg;
  ppo_cfg.policy = Policy::kPpo;
  Trainer a(wm_cfg, 5), b(ppo_cfg, 5);
  a.run(3);
  b.run(3);
  CHECK(max_abs_diff(a.agent().actor_params(), b.agent().actor_params()) == 0.0);
  CHECK(max_abs_diff(a.agent().critic_params(), b.agent().critic_params()) == 0.0);
}

TEST_CASE("active knobs change the update") {
  RunConfig wm_cfg = tiny(Policy::kWmPpo);
  wm_cfg.ppo.gae_lambda = 0.0;
  RunConfig ppo_cfg = wm_cfg;
  ppo_cfg.policy = Policy::kPpo;
  Trainer a(wm_cfg, 5), b(ppo_cfg, 5);
  const auto ma = a.run(2);
  b.run(2);
  CHECK(max_abs_diff(a.agent().actor_params(), b.agent().actor_params()) > 0.0);
  CHECK(ma.back().imagined_states > 0);
  CHECK(ma.back().wm_steps == wm_cfg.wm.train_steps);
}

TEST_CASE("zero iterations change nothing and rows track iterations") {
  Trainer t(tiny(Policy::kWmPpo), 1);
  const auto actor = snapshot(t.agent().actor_params());
  const auto model = snapshot(t.world_model().params());
  CHECK(t.run(0).empty());
  CHECK(same(actor, t.agent().actor_params()));
  CHECK(same(model, t.world_model().params()));
  const auto rows = t.run(4);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].iteration == i + 1);
  CHECK(t.iteration() == 4);
  CHECK_FALSE(same(actor, t.agent().actor_params()));
}

TEST_CASE("always-offload accuracy is the edge accuracy") {
  const env::SystemConfig s = env::SystemConfig::defaults(2);
  const EvalReport r = run_baseline(Policy::kAlwaysOffload, s, 1, 20);
  CHECK(r.accuracy.mean == doctest::Approx(s.qos.a_mec).epsilon(1e-12));
  CHECK(r.hallucination.mean == doctest::Approx(s.qos.resolved_h_mec()).epsilon(1e-12));
  CHECK(r.alpha.mean == 1.0);
}

TEST_CASE("always-local hallucination is the local profile mean") {
  env::SystemConfig s = env::SystemConfig::defaults(2);
  s.qos.concentration = 0.0;
  const EvalReport exact = run_baseline(Policy::kAlwaysLocal, s, 1, 5);
  CHECK(exact.hallucination.mean == doctest::Approx(s.qos.local.offline_hallucination).epsilon(1e-12));
  CHECK(exact.accuracy.mean == doctest::Approx(s.qos.local.offline_accuracy).epsilon(1e-12));

  // Stochastic per-slot QoS: the episode means scatter around the profile.
  const env::SystemConfig noisy = env::SystemConfig::defaults(2);
  const EvalReport r = run_baseline(Policy::kAlwaysLocal, noisy, 1, 100);
  CHECK(std::abs(r.hallucination.mean - noisy.qos.local.offline_hallucination) < 4.0 * r.hallucination.se);
  CHECK(r.alpha.mean == 0.0);
  CHECK(r.energy.mean > 0.0);
}

TEST_CASE("baselines are deterministic under a seed") {
  const env::SystemConfig s = env::SystemConfig::defaults(2);
  for (Policy p : {Policy::kAlwaysLocal, Policy::kAlwaysOffload}) {
    const EvalReport a = run_baseline(p, s, 3, 10);
    const EvalReport b = run_baseline(p, s, 3, 10);
    CHECK(to_json(a).dump() == to_json(b).dump());
  }
  CHECK_THROWS_AS(baseline_unit_action(Policy::kPpo, 2), std::invalid_argument);
}

TEST_CASE("baseline trainers do not learn") {
  Trainer t(tiny(Policy::kAlwaysOffload), 1);
  const auto before = snapshot(t.agent().actor_params());
  const auto rows = t.run(3);
  CHECK(rows.size() == 3);
  CHECK(rows[0].ppo.steps == 0);
  CHECK(same(before, t.agent().actor_params()));
  CHECK(rows[2].episode.alpha == 1.0);
}

TEST_CASE("a frozen random policy has stationary reward") {
  RunConfig cfg = tiny(Policy::kPpo, 20);
  Trainer t(cfg, 6);
  Rng rng(6, 11);
  std::vector<double> first, second;
  for (int e = 0; e < 60; ++e) {
    const EpisodeStats s = summarize(collect(t.env(), stochastic_actor(t.agent().actor(), rng), 20).outcomes);
    (e < 30 ? first : second).push_back(s.reward_mean);
  }
  const MeanSe a = mean_se(first), b = mean_se(second);
  CHECK(std::abs(a.mean - b.mean) < 4.0 * std::sqrt(a.se * a.se + b.se * b.se));
}

TEST_CASE("mean and standard error") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const MeanSe m = mean_se(v);
  CHECK(m.mean == 2.5);
  CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-14));
  CHECK(mean_se(std::vector<double>{7.0}).se == 0.0);
}

TEST_CASE("checkpoint resume continues bit-identically") {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "mecllm_trainer_resume";
  std::filesystem::remove_all(dir);
  for (Policy p : {Policy::kWmPpo, Policy::kPpo}) {
    const RunConfig cfg = tiny(p);
    Trainer straight(cfg, 8);
    const auto full = straight.run(4);

    Trainer first(cfg, 8);
    first.run(2);
    first.save(dir / "ckpt.bin");
    Trainer resumed(cfg, 8);
    resumed.load(dir / "ckpt.bin");
    CHECK(resumed.iteration() == 2);
    const auto tail = resumed.run(2);
    REQUIRE(tail.size() == 2);
    CHECK(tail[1].iteration == 4);
    CHECK(to_json(tail[1]).dump() == to_json(full[3]).dump());
    CHECK(max_abs_diff(resumed.agent().actor_params(), straight.agent().actor_params()) == 0.0);
    CHECK(max_abs_diff(resumed.agent().critic_params(), straight.agent().critic_params()) == 0.0);
    CHECK(max_abs_diff(resumed.world_model().params(), straight.world_model().params()) == 0.0);
  }
  Trainer other(tiny(Policy::kWmPpo), 99);
  CHECK_THROWS_AS(other.load(dir / "ckpt.bin"), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("evaluation is deterministic and uses the mean action") {
  Trainer t(tiny(Policy::kPpo), 4);
  const EvalReport a = t.evaluate(4);
  const EvalReport b = t.evaluate(4);
  CHECK(to_json(a).dump() == to_json(b).dump());
  CHECK(a.episodes.size() == 4);
  CHECK(a.qos_satisfaction <= std::min(a.accuracy_satisfaction, a.hallucination_satisfaction));
}

TEST_CASE("run config round-trips through json") {
  RunConfig c = tiny(Policy::kPpo);
  c.seeds = {3, 4};
  c.iterations = 7;
  const RunConfig back = run_config_from_json(to_json(c), {});
  CHECK(to_json(back).dump() == to_json(c).dump());
  CHECK(config_hash(back) == config_hash(c));

  RunConfig moved = c;
  moved.seeds = {11};
  moved.output_dir = "elsewhere";
  CHECK(config_hash(moved) == config_hash(c));
  moved.ppo.clip = 0.2;
  CHECK(config_hash(moved) != config_hash(c));
}

TEST_CASE("run config rejects unknown keys and bad values") {
  using nlohmann::json;
  CHECK_THROWS_AS(run_config_from_json(json{{"bogus", 1}}, {}), std::invalid_argument);
  CHECK_THROWS_AS(run_config_from_json(json{{"ppo", {{"clpi", 0.1}}}}, {}), std::invalid_argument);
  CHECK_THROWS_AS(run_config_from_json(json{{"trainer", {{"iterations", 0}}}}, {}), std::invalid_argument);
  CHECK_THROWS_AS(run_config_from_json(json{{"trainer", {{"seeds", json::array()}}}}, {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_config_from_json(json{{"trainer", {{"policy", "td3"}}}}, {}), std::invalid_argument);
  CHECK(policy_from_string("always-offload") == Policy::kAlwaysOffload);
}

TEST_CASE("convergence is declared on a flat moving average") {
  std::vector<double> r(100, 1.0);
  for (std::size_t i = 0; i < 50; ++i) r[i] = 0.02 * static_cast<double>(i);
  const auto at = convergence_iteration(r);
  REQUIRE(at.has_value());
  // Windows ending at i and i - 20 must both lie on the plateau region closely.
  CHECK(*at > 50);
  CHECK(*at <= 90);
  CHECK_FALSE(convergence_iteration(std::vector<double>(39, 1.0)).has_value());
  CHECK(convergence_iteration(std::vector<double>(40, 1.0)) == std::optional<std::size_t>(40));
  std::vector<double> ramp(200);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 1.0 + static_cast<double>(i);
  CHECK_FALSE(convergence_iteration(ramp).has_value());
}
