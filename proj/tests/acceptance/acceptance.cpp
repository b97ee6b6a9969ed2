// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any selected criterion fails. `acceptance 1,2,7` runs a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mecllm/diff/gaussian.hpp"
#include "mecllm/ecld/distill.hpp"
#include "mecllm/ecld/offline_metrics.hpp"
#include "mecllm/ecld/pipeline.hpp"
#include "mecllm/ecld/quantize.hpp"
#include "mecllm/env/channel.hpp"
#include "mecllm/env/costs.hpp"
#include "mecllm/env/qos.hpp"
#include "mecllm/ppo/ppo.hpp"
#include "mecllm/trainer/run_config.hpp"
#include "mecllm/trainer/trainer.hpp"
#include "mecllm/wm/imagination.hpp"
#include "mecllm/wm/rssm.hpp"
#include "support/cli_runner.hpp"
#include "support/ecld_oracles.hpp"
#include "support/env_oracles.hpp"
#include "support/gradcheck.hpp"

using namespace mecllm;
using nlohmann::json;
using testing::grad_check;
using testing::random_matrix;
namespace fs = std::filesystem;

namespace {

const fs::path kData = MECLLM_DATA_DIR;
const std::string kCli = MECLLM_CLI;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// ---------------------------------------------------------------- criterion 1

constexpr int kGradInstances = 20;
constexpr double kGradTol = 1e-4;

ppo::Batch random_batch(ppo::ActorCritic& ac, std::size_t n, Rng& rng) {
  const Matrix states = random_matrix(static_cast<Eigen::Index>(n),
                                      static_cast<Eigen::Index>(ac.actor().state_width()), rng);
  const diff::GaussianSample g = ac.actor().sample(states, rng);
  ppo::Batch b;
  b.states = states;
  b.raw = g.raw;
  b.noise = g.noise;
  for (Eigen::Index i = 0; i < g.log_prob.size(); ++i) b.old_log_probs.push_back(g.log_prob(i) + 0.05 * rng.normal());
  for (std::size_t i = 0; i < n; ++i) {
    b.advantages.push_back(rng.normal());
    b.targets.push_back(rng.normal());
  }
  return b;
}

wm::WmSequence random_sequence(std::size_t len, std::size_t batch, std::size_t s, std::size_t a, Rng& rng) {
  wm::WmSequence seq;
  const auto b = static_cast<Eigen::Index>(batch);
  for (std::size_t k = 0; k < len; ++k) seq.obs.push_back(random_matrix(b, static_cast<Eigen::Index>(s), rng));
  for (std::size_t k = 0; k + 1 < len; ++k) {
    seq.actions.push_back(
        random_matrix(b, static_cast<Eigen::Index>(a), rng).unaryExpr([](double v) { return diff::sigmoid(v); }));
    std::vector<double> r(batch), d(batch);
    for (std::size_t i = 0; i < batch; ++i) {
      r[i] = rng.normal();
      d[i] = rng.uniform() < 0.3 ? 1.0 : 0.0;
    }
    seq.rewards.push_back(r);
    seq.dones.push_back(d);
  }
  return seq;
}

Outcome criterion_gradients() {
  const auto t0 = Clock::now();
  std::map<std::string, double> worst;
  std::map<std::string, int> instances;
  auto record = [&](const std::string& name, const testing::GradCheckResult& r) {
    worst[name] = std::max(worst[name], r.checked > 0 ? r.max_rel_error : 1.0);
    ++instances[name];
  };

  for (int i = 0; i < kGradInstances; ++i) {
    Rng rng(1000 + static_cast<std::uint64_t>(i));
    ppo::PpoConfig cfg;
    cfg.hidden = 8;
    cfg.entropy_coeff = rng.uniform(0.001, 0.1);
    cfg.clip = rng.uniform(0.05, 0.3);
    const std::size_t s = 2 + rng.index(4), a = 1 + rng.index(3);
    ppo::ActorCritic ac(s, a, cfg);
    ac.init(rng);
    const ppo::Batch b = random_batch(ac, 16 + rng.index(16), rng);

    record("ppo surrogate + entropy",
           grad_check(
               ac.actor_params(),
               [&] {
                 return ppo::actor_loss(ac.actor(), b.states, b.raw, b.noise, b.old_log_probs, b.advantages, cfg,
                                        false)
                     .total;
               },
               [&] {
                 diff::zero_grads(ac.actor_params());
                 ppo::actor_loss(ac.actor(), b.states, b.raw, b.noise, b.old_log_probs, b.advantages, cfg, true);
               },
               1e-6));

    auto critic_value = [&] {
      const Matrix v = ac.critic().forward(b.states, nullptr);
      return ppo::critic_loss(std::vector<double>(v.data(), v.data() + v.size()), b.targets).value;
    };
    record("critic mse", grad_check(
                             ac.critic_params(), critic_value,
                             [&] {
                               diff::zero_grads(ac.critic_params());
                               diff::MlpCache cache;
                               const Matrix v = ac.critic().forward(b.states, &cache);
                               const auto l = ppo::critic_loss(std::vector<double>(v.data(), v.data() + v.size()),
                                                               b.targets);
                               Matrix dv(v.rows(), 1);
                               for (Eigen::Index r = 0; r < v.rows(); ++r) dv(r, 0) = l.d_values[static_cast<std::size_t>(r)];
                               ac.critic().backward(cache, dv);
                             },
                             1e-6));

    wm::WmConfig wc;
    wc.n_h = 4 + rng.index(4);
    wc.n_z = 2 + rng.index(3);
    wc.hidden = 5 + rng.index(4);
    wc.lambda_r = rng.uniform(0.2, 2.0);
    wc.beta_kl = rng.uniform(0.2, 2.0);
    wc.done_weight = rng.uniform(0.2, 2.0);
    wm::Rssm model(s, a, wc);
    model.init(rng);
    const std::size_t len = 2 + rng.index(3), batch = 2 + rng.index(3);
    const wm::WmSequence seq = random_sequence(len, batch, s, a, rng);
    std::vector<Matrix> noise;
    for (std::size_t k = 0; k < len; ++k) {
      noise.push_back(random_matrix(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(wc.n_z), rng));
    }
    record("world-model loss", grad_check(
                                   model.params(), [&] { return model.loss(seq, noise, false).total; },
                                   [&] {
                                     diff::zero_grads(model.params());
                                     model.loss(seq, noise, true);
                                   },
                                   1e-5));

    const double eta = rng.uniform(0.1, 1.0);
    const wm::Imagined im = wm::imagine(model, random_matrix(4, static_cast<Eigen::Index>(s), rng), ac.actor(),
                                        ac.critic(), 1 + rng.index(3), rng.uniform(0.5, 0.99), rng);
    const std::vector<double> coeff = wm::imagination_coefficients(im, ac.critic());
    record("imagination loss", grad_check(
                                   ac.actor_params(),
                                   [&] { return wm::imagination_loss(im, coeff, ac.actor(), eta, false); },
                                   [&] {
                                     diff::zero_grads(ac.actor_params());
                                     wm::imagination_loss(im, coeff, ac.actor(), eta, true);
                                   },
                                   1e-6));
  }
  const double elapsed = seconds_since(t0);
  Outcome o;
  o.pass = elapsed < 60.0;
  std::ostringstream d;
  for (const auto& [name, w] : worst) {
    o.pass = o.pass && w < kGradTol && instances[name] >= kGradInstances;
    d << name << " " << instances[name] << "x max rel " << fmt("%.2e", w) << "; ";
  }
  d << "runtime " << fmt("%.1f", elapsed) << " s";
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------- criterion 2

constexpr int kOracleInputs = 100;

double rel(double got, double want) {
  if (got == want) return 0.0;
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

Outcome criterion_oracles() {
  std::map<std::string, double> worst;
  std::map<std::string, int> count;
  auto record = [&](const std::string& name, double e) {
    worst[name] = std::max(worst[name], e);
    ++count[name];
  };
  Rng rng(2024);
  for (int i = 0; i < kOracleInputs; ++i) {
    const double alpha = rng.uniform(), x = rng.uniform(1e5, 5e6), f = rng.uniform(5e8, 4e9);
    const double phi = rng.uniform(100, 2000), kappa = rng.uniform(1e-29, 1e-27);
    const double rate = rng.uniform(1e6, 1e9), p = rng.uniform(0.0, 2.0), big_f = rng.uniform(1e9, 5e10);
    const auto lc = env::local_cost(alpha, x, f, phi, kappa);
    record("local latency", rel(lc.latency_s, testing::oracle_local_latency(alpha, x, f, phi)));
    record("local energy", rel(lc.energy_j, testing::oracle_local_energy(alpha, x, f, phi, kappa)));
    const auto oc = env::offload_cost(alpha, x, rate, p, phi, big_f, 1e9);
    record("offload latency", std::max(rel(oc.l_off_s, testing::oracle_l_off(alpha, x, rate)),
                                       rel(oc.l_mec_s, testing::oracle_l_mec(alpha, x, phi, big_f))));
    record("offload energy", rel(oc.e_off_j, testing::oracle_e_off(alpha, x, rate, p)));

    const std::size_t k_count = 1 + rng.index(5);
    std::vector<double> ps(k_count), hs(k_count), a(k_count), h(k_count), e(k_count), emax(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      ps[k] = rng.uniform(0.0, 2.0);
      hs[k] = rng.uniform(1e-7, 1e-5);
      a[k] = rng.uniform();
      h[k] = rng.uniform();
      e[k] = rng.uniform(0.0, 3.0);
      emax[k] = rng.uniform(0.5, 2.5);
    }
    const std::size_t k = rng.index(k_count);
    record("uplink rate",
           rel(env::uplink_rate(k, ps, hs, 1e7, 4e-14), testing::oracle_rate(k, ps, hs, 1e7, 4e-14)));
    const double al = rng.uniform(), hl = rng.uniform(), am = rng.uniform(), hm = rng.uniform();
    const env::Qos q = env::qos_blend(alpha, al, hl, am, hm);
    record("qos blending", std::max(rel(q.accuracy, testing::oracle_blend(alpha, al, am)),
                                    rel(q.hallucination, testing::oracle_blend(alpha, hl, hm))));
    const double a_min = rng.uniform(), h_max = rng.uniform();
    record("penalty omega", rel(env::penalty(a, h, e, emax, a_min, h_max).total(),
                                testing::oracle_penalty(a, h, e, emax, a_min, h_max)));

    const int bits = 1 + static_cast<int>(rng.index(12));
    const double lo = rng.uniform(-2.0, 0.0), hi = lo + rng.uniform(0.1, 3.0);
    const double w = rng.uniform(-3.0, 3.0);
    record("quantizer", rel(ecld::quantize_value(w, {bits, lo, hi}), testing::oracle_quantize(w, bits, lo, hi)));

    const std::size_t n = 1 + rng.index(4), c = 2 + rng.index(4);
    const double d_alpha = rng.uniform(), tau = rng.uniform(0.3, 5.0);
    const Matrix zs = random_matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c), rng, 2.0);
    const Matrix zt = random_matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c), rng, 2.0);
    std::vector<int> labels;
    std::vector<std::vector<double>> vs, vt;
    for (std::size_t r = 0; r < n; ++r) {
      labels.push_back(static_cast<int>(rng.index(c)));
      const auto rr = static_cast<Eigen::Index>(r);
      vs.emplace_back(zs.row(rr).begin(), zs.row(rr).end());
      vt.emplace_back(zt.row(rr).begin(), zt.row(rr).end());
    }
    record("distillation loss",
           rel(ecld::distill_loss(zs, zt, ecld::one_hot(labels, c), {d_alpha, tau}).value,
               testing::oracle_distill(vs, vt, labels, d_alpha, tau)));

    const std::string alphabet = "abAB xy";
    auto word = [&](std::size_t len) {
      std::string out;
      for (std::size_t j = 0; j < len; ++j) out += alphabet[rng.index(alphabet.size())];
      return out;
    };
    const std::size_t m = 1 + rng.index(20);
    std::vector<ecld::Prediction> preds;
    std::vector<ecld::Reference> refs;
    std::vector<std::string> ptext, answers;
    for (std::size_t j = 0; j < m; ++j) {
      preds.push_back({std::to_string(j), word(8)});
      refs.push_back({std::to_string(j), word(2)});
      ptext.push_back(preds.back().text);
      answers.push_back(refs.back().answer);
    }
    std::reverse(refs.begin(), refs.end());
    const double acc_want = testing::oracle_accuracy(ptext, answers);
    const double acc_got = ecld::offline_accuracy(preds, refs);
    record("offline accuracy", acc_want == 0.0 ? std::abs(acc_got) : rel(acc_got, acc_want));
    std::vector<ecld::ArticleLabels> arts;
    std::vector<std::vector<int>> raw;
    for (std::size_t j = 0; j < m; ++j) {
      std::vector<int> lab(1 + rng.index(6));
      for (int& l : lab) l = rng.uniform() < 0.6 ? 1 : 0;
      arts.push_back({std::to_string(j), lab});
      raw.push_back(lab);
    }
    const double hal_want = testing::oracle_hallucination(raw);
    const double hal_got = ecld::offline_hallucination(arts);
    record("offline hallucination", hal_want == 0.0 ? std::abs(hal_got) : rel(hal_got, hal_want));
  }
  Outcome o;
  o.pass = true;
  std::ostringstream d;
  for (const auto& [name, w] : worst) {
    o.pass = o.pass && w <= 1e-12 && count[name] >= kOracleInputs;
    d << name << " " << fmt("%.1e", w) << "; ";
  }
  d << count.size() << " formulas x " << kOracleInputs << " inputs";
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------- criterion 3

double max_abs_diff(const diff::ParamList& a, const diff::ParamList& b) {
  double m = a.size() == b.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    const auto& x = a[i].value->values();
    const auto& y = b[i].value->values();
    if (x.size() != y.size()) return INFINITY;
    for (std::size_t j = 0; j < x.size(); ++j) m = std::max(m, std::abs(x[j] - y[j]));
  }
  return m;
}

Outcome criterion_equivalence(const trainer::RunConfig& base) {
  double worst = 0.0;
  for (std::uint64_t seed : base.seeds) {
    trainer::RunConfig wm_cfg = base;
    wm_cfg.system = trainer::with_num_mlus(base.system, 2);
    wm_cfg.policy = trainer::Policy::kWmPpo;
    wm_cfg.wm.lambda_wm = 0.0;
    wm_cfg.wm.eta = 0.0;
    wm_cfg.ppo.gae_lambda = 0.0;
    trainer::RunConfig ppo_cfg = wm_cfg;
    ppo_cfg.policy = trainer::Policy::kPpo;
    trainer::Trainer a(wm_cfg, seed), b(ppo_cfg, seed);
    a.run(3);
    b.run(3);
    worst = std::max({worst, max_abs_diff(a.agent().actor_params(), b.agent().actor_params()),
                      max_abs_diff(a.agent().critic_params(), b.agent().critic_params())});
  }
  return {worst == 0.0, "actor and critic max |diff| after 3 iterations = " + fmt("%g", worst) + " over " +
                            std::to_string(base.seeds.size()) + " seeds"};
}

// ------------------------------------------------------------ criteria 4 to 6

struct TrainedRun {
  trainer::EvalReport eval;
  double seconds = 0.0;
  std::optional<std::size_t> converged;
};

// Trained or baseline evaluation for (K, policy, seed), computed once.
class RunCache {
 public:
  explicit RunCache(trainer::RunConfig base) : base_(std::move(base)) {}

  const TrainedRun& get(std::size_t k, trainer::Policy p, std::uint64_t seed) {
    const auto key = std::make_tuple(k, static_cast<int>(p), seed);
    auto it = runs_.find(key);
    if (it != runs_.end()) return it->second;
    trainer::RunConfig cfg = base_;
    cfg.system = trainer::with_num_mlus(base_.system, k);
    cfg.policy = p;
    TrainedRun r;
    const auto t0 = Clock::now();
    trainer::Trainer t(cfg, seed);
    if (trainer::is_learned(p)) {
      std::vector<double> rewards;
      for (const auto& m : t.run(cfg.iterations)) rewards.push_back(m.episode.reward_mean);
      r.converged = trainer::convergence_iteration(rewards);
    }
    r.seconds = seconds_since(t0);
    r.eval = t.evaluate(cfg.eval_episodes);
    std::fprintf(stderr, "  trained K=%zu %s seed %llu: %.1f s, eval latency %.4f, acc %.4f, hal %.4f, qos %.2f\n", k,
                 trainer::to_string(p).c_str(), static_cast<unsigned long long>(seed), r.seconds,
                 r.eval.latency.mean, r.eval.accuracy.mean, r.eval.hallucination.mean, r.eval.qos_satisfaction);
    return runs_.emplace(key, std::move(r)).first->second;
  }

  const trainer::RunConfig& config() const { return base_; }

 private:
  trainer::RunConfig base_;
  std::map<std::tuple<std::size_t, int, std::uint64_t>, TrainedRun> runs_;
};

Outcome criterion_constraints(RunCache& cache) {
  const auto& cfg = cache.config();
  std::size_t ok = 0, total = 0;
  double seconds = 0.0, worst_seed = 0.0;
  std::ostringstream per_seed;
  for (std::uint64_t seed : cfg.seeds) {
    const TrainedRun& r = cache.get(2, trainer::Policy::kWmPpo, seed);
    std::size_t seed_ok = 0;
    for (const auto& e : r.eval.episodes) {
      if (e.accuracy >= cfg.system.qos.a_min && e.hallucination <= cfg.system.qos.h_max) ++seed_ok;
    }
    ok += seed_ok;
    total += r.eval.episodes.size();
    seconds += r.seconds;
    worst_seed = std::max(worst_seed, r.seconds);
    per_seed << " seed " << seed << ": " << seed_ok << "/" << r.eval.episodes.size();
  }
  const double share = total ? static_cast<double>(ok) / static_cast<double>(total) : 0.0;
  Outcome o;
  o.pass = total >= 300 && share >= 0.9 && seconds <= 900.0;
  o.detail = "episodes with mean accuracy >= " + fmt("%g", cfg.system.qos.a_min) + " and hallucination <= " +
             fmt("%g", cfg.system.qos.h_max) + ": " + std::to_string(ok) + "/" + std::to_string(total) + " (" +
             per_seed.str() + " ); training " + fmt("%.0f", seconds) + " s for all seeds";
  return o;
}

Outcome criterion_ordering(RunCache& cache) {
  const auto& cfg = cache.config();
  Outcome o{true, ""};
  std::ostringstream d;
  for (std::uint64_t seed : cfg.seeds) {
    const auto& dyn = cache.get(2, trainer::Policy::kWmPpo, seed).eval;
    const auto& off = cache.get(2, trainer::Policy::kAlwaysOffload, seed).eval;
    const auto& loc = cache.get(2, trainer::Policy::kAlwaysLocal, seed).eval;
    // a >= b within one standard error: a + max(se_a, se_b) >= b.
    auto geq = [](const trainer::MeanSe& a, const trainer::MeanSe& b) {
      return a.mean + std::max(a.se, b.se) >= b.mean;
    };
    const bool acc = geq(off.accuracy, dyn.accuracy) && geq(dyn.accuracy, loc.accuracy);
    const bool hal = geq(dyn.hallucination, off.hallucination) && geq(loc.hallucination, dyn.hallucination);
    o.pass = o.pass && acc && hal;
    d << "seed " << seed << " accuracy " << fmt("%.4f", off.accuracy.mean) << " >= " << fmt("%.4f", dyn.accuracy.mean)
      << " >= " << fmt("%.4f", loc.accuracy.mean) << ", hallucination " << fmt("%.4f", off.hallucination.mean)
      << " <= " << fmt("%.4f", dyn.hallucination.mean) << " <= " << fmt("%.4f", loc.hallucination.mean)
      << (acc && hal ? "" : " (violated)") << "; ";
  }
  o.detail = d.str();
  return o;
}

Outcome criterion_latency(RunCache& cache) {
  const auto& cfg = cache.config();
  Outcome o{true, ""};
  std::ostringstream d;
  for (std::size_t k : {2u, 3u}) {
    std::vector<double> wm_lat, ppo_lat, wm_qos, ppo_qos;
    std::string conv;
    for (std::uint64_t seed : cfg.seeds) {
      const auto& w = cache.get(k, trainer::Policy::kWmPpo, seed);
      const auto& p = cache.get(k, trainer::Policy::kPpo, seed);
      wm_lat.push_back(w.eval.latency.mean);
      ppo_lat.push_back(p.eval.latency.mean);
      wm_qos.push_back(w.eval.qos_satisfaction);
      ppo_qos.push_back(p.eval.qos_satisfaction);
      conv += " " + (w.converged ? std::to_string(*w.converged) : std::string("-")) + "/" +
              (p.converged ? std::to_string(*p.converged) : std::string("-"));
    }
    const double wm_mean = trainer::mean_se(wm_lat).mean, ppo_mean = trainer::mean_se(ppo_lat).mean;
    o.pass = o.pass && wm_mean <= ppo_mean;
    d << "K=" << k << " wm-ppo " << fmt("%.4f", wm_mean) << " s vs ppo " << fmt("%.4f", ppo_mean)
      << " s (reduction " << fmt("%+.1f", 100.0 * (ppo_mean - wm_mean) / ppo_mean) << "%; qos satisfaction "
      << fmt("%.2f", trainer::mean_se(wm_qos).mean) << " vs " << fmt("%.2f", trainer::mean_se(ppo_qos).mean)
      << "; convergence iteration wm/ppo:" << conv << "); ";
  }
  d << "budget " << cfg.iterations << " iterations per run";
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------- criterion 7

Outcome criterion_ecld() {
  const fs::path path = kData / "configs" / "compress.json";
  std::ifstream is(path);
  const ecld::EcldConfig cfg = ecld::ecld_config_from_json(json::parse(is), path.parent_path());
  const ecld::CompressionReport r = ecld::run_ecld(cfg);
  Outcome o;
  o.pass = r.bits == 4 && r.storage_ratio <= 0.30 && r.distilled_accuracy >= r.pruned_accuracy;
  o.detail = "q=" + std::to_string(r.bits) + " storage " + fmt("%.1f", 100.0 * r.storage_ratio) +
             "% of the 64-bit baseline; accuracy pruned " + fmt("%.4f", r.pruned_accuracy) + ", distilled " +
             fmt("%.4f", r.distilled_accuracy) + ", quantized " + fmt("%.4f", r.quantized_accuracy);
  return o;
}

// ---------------------------------------------------------------- criterion 8

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() != "stderr.txt") {
      files[fs::relative(e.path(), root).string()] = testing::slurp(e.path());
    }
  }
  return files;
}

Outcome criterion_determinism() {
  const std::string smoke = (kData / "configs" / "smoke.json").string();
  const std::string compress = (kData / "configs" / "compress.json").string();
  const std::vector<std::string> commands = {
      "train --config " + smoke + " --seed 3 --out train",
      "evaluate --config " + smoke + " --seed 3 --out train",
      "evaluate --config " + smoke + " --seed 3 --baseline always-local --out local",
      "compare --config " + smoke + " --iterations 3 --out compare",
      "env-check --config " + smoke + " --out env",
      "compress --config " + compress + " --out compress",
      "profile-catalog --out profiles",
  };
  std::map<std::string, std::string> first;
  std::size_t files = 0;
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path dir = testing::scratch_dir("acceptance_det_" + std::to_string(rep));
    for (const auto& c : commands) {
      const auto r = testing::run_cli(kCli, c, dir);
      if (r.exit_code != 0) return {false, "'" + c + "' exited " + std::to_string(r.exit_code) + ": " + r.err};
    }
    auto t = tree(dir);
    if (rep == 0) {
      first = std::move(t);
      files = first.size();
    } else if (t != first) {
      for (const auto& [name, bytes] : first) {
        if (!t.count(name) || t[name] != bytes) return {false, "output differs: " + name};
      }
      return {false, "second run wrote extra files"};
    }
    fs::remove_all(dir);
  }
  return {files > 0, std::to_string(commands.size()) + " commands, " + std::to_string(files) +
                         " output files byte-identical across two runs"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected{1, 2, 3, 4, 5, 6, 7, 8};
  if (argc > 1) {
    selected.clear();
    std::stringstream ss(argv[1]);
    for (std::string tok; std::getline(ss, tok, ',');) selected.insert(std::stoi(tok));
  }
  const fs::path config_path = argc > 2 ? fs::path(argv[2]) : kData / "configs" / "acceptance.json";
  const trainer::RunConfig cfg = trainer::load_run_config(config_path);
  RunCache cache(cfg);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient suite", criterion_gradients},
      {"formula oracles", criterion_oracles},
      {"degenerate-knob equivalence", [&] { return criterion_equivalence(cfg); }},
      {"constraint satisfaction", [&] { return criterion_constraints(cache); }},
      {"qos ordering", [&] { return criterion_ordering(cache); }},
      {"latency improvement", [&] { return criterion_latency(cache); }},
      {"ecld report", criterion_ecld},
      {"cli determinism", criterion_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("criterion %d %s: %s | %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
