// mecllm: compression reports, environment checks, training, evaluation and
// policy comparison. Every output file carries the config hash and seed; no
// output depends on wall-clock time, so equal config and seed give equal bytes.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mecllm/core/hash.hpp"
#include "mecllm/ecld/pipeline.hpp"
#include "mecllm/ecld/profiles.hpp"
#include "mecllm/env/trace.hpp"
#include "mecllm/trainer/run_config.hpp"
#include "mecllm/trainer/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mecllm;
using mecllm::env::format_double;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string baseline;
  std::optional<std::size_t> iterations;
  std::string checkpoint;
  bool resume = false;
};

// Raised for bad input; reported with kind "config" and exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  os.flush();
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string csv_header(const std::string& hash, const std::string& seed) {
  return "# config_hash=" + hash + " seed=" + seed + "\n";
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string s;
  for (std::size_t i = 0; i < seeds.size(); ++i) s += (i ? "," : "") + std::to_string(seeds[i]);
  return s;
}

trainer::RunConfig load_config(const Options& o) {
  if (o.config.empty()) throw UsageError("--config is required");
  if (!fs::exists(o.config)) throw UsageError("config file not found: " + o.config);
  trainer::RunConfig cfg;
  try {
    cfg = trainer::load_run_config(o.config);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (o.iterations) cfg.iterations = *o.iterations;
  if (!o.baseline.empty()) {
    try {
      cfg.policy = trainer::policy_from_string(o.baseline);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  }
  if (o.seed) cfg.seeds = {*o.seed};
  if (!o.out.empty()) cfg.output_dir = o.out;
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

json config_echo(const trainer::RunConfig& cfg, std::uint64_t seed) {
  return {{"config_hash", trainer::config_hash(cfg)}, {"seed", seed}, {"config", trainer::to_json(cfg)}};
}

fs::path seed_dir(const trainer::RunConfig& cfg, std::uint64_t seed) {
  return cfg.output_dir / ("seed-" + std::to_string(seed));
}

std::string eval_episodes_csv(const trainer::EvalReport& r, const std::string& hash, std::uint64_t seed,
                              const std::string& policy) {
  std::ostringstream os;
  os << csv_header(hash, std::to_string(seed))
     << "policy,episode,steps,reward_mean,latency_s,accuracy,hallucination,energy_j,alpha,"
        "accuracy_violation_rate,hallucination_violation_rate,energy_violation_rate,infeasible_rate\n";
  for (std::size_t e = 0; e < r.episodes.size(); ++e) {
    const auto& s = r.episodes[e];
    os << policy << ',' << e << ',' << s.steps;
    for (double v : {s.reward_mean, s.latency, s.accuracy, s.hallucination, s.energy, s.alpha,
                     s.accuracy_violation_rate, s.hallucination_violation_rate, s.energy_violation_rate,
                     s.infeasible_rate}) {
      os << ',' << format_double(v);
    }
    os << '\n';
  }
  return os.str();
}

void write_evaluation(const fs::path& dir, const trainer::RunConfig& cfg, std::uint64_t seed,
                      const trainer::EvalReport& r) {
  const std::string hash = trainer::config_hash(cfg);
  const std::string policy = trainer::to_string(cfg.policy);
  json j = trainer::to_json(r);
  j["config_hash"] = hash;
  j["seed"] = seed;
  j["policy"] = policy;
  j["evaluation_seed"] = trainer::evaluation_seed(seed);
  write_json(dir / "eval.json", j);
  write_text(dir / "eval_episodes.csv", eval_episodes_csv(r, hash, seed, policy));
}

// Keeps the first n lines of a metrics file; throws if it holds fewer.
void truncate_lines(const fs::path& path, std::size_t n) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("resume: missing " + path.string());
  std::string kept, line;
  std::size_t count = 0;
  while (count < n && std::getline(is, line)) {
    kept += line + "\n";
    ++count;
  }
  if (count < n) {
    throw std::runtime_error("resume: " + path.string() + " holds " + std::to_string(count) +
                             " rows but the checkpoint is at iteration " + std::to_string(n));
  }
  is.close();
  write_text(path, kept);
}

std::vector<double> metric_column(const fs::path& path, const char* key) {
  std::ifstream is(path);
  std::vector<double> out;
  std::string line;
  while (std::getline(is, line)) out.push_back(json::parse(line).at(key).get<double>());
  return out;
}

int cmd_train(const Options& o) {
  const trainer::RunConfig cfg = load_config(o);
  const std::string hash = trainer::config_hash(cfg);
  std::ostringstream summary;
  summary << csv_header(hash, join_seeds(cfg.seeds))
          << "config_hash,seed,policy,iterations,final_reward_ma20,converged_iteration,eval_latency_s,"
             "eval_latency_se,eval_accuracy,eval_hallucination,eval_energy_j,eval_reward,"
             "accuracy_satisfaction,hallucination_satisfaction,qos_satisfaction\n";
  for (std::uint64_t seed : cfg.seeds) {
    const fs::path dir = seed_dir(cfg, seed);
    const fs::path metrics = dir / "metrics.jsonl";
    const fs::path ckpt_dir = dir / "checkpoints";
    fs::create_directories(ckpt_dir);
    trainer::Trainer t(cfg, seed);
    if (o.resume) {
      t.load(ckpt_dir / "latest.ckpt");
      truncate_lines(metrics, t.iteration());
    } else {
      write_text(metrics, "");
    }
    write_json(dir / "config.json", config_echo(cfg, seed));
    {
      std::ofstream os(metrics, std::ios::binary | std::ios::app);
      if (!os) throw std::runtime_error("cannot append to " + metrics.string());
      while (t.iteration() < cfg.iterations) {
        json row = trainer::to_json(t.train_iteration());
        row["config_hash"] = hash;
        row["seed"] = seed;
        row["policy"] = trainer::to_string(cfg.policy);
        os << row.dump() << '\n';
        os.flush();
        if (cfg.checkpoint_interval > 0 && t.iteration() % cfg.checkpoint_interval == 0) {
          t.save(ckpt_dir / ("iter-" + std::to_string(t.iteration()) + ".ckpt"));
          t.save(ckpt_dir / "latest.ckpt");
        }
      }
      if (!os) throw std::runtime_error("write failed for " + metrics.string());
    }
    t.save(ckpt_dir / "latest.ckpt");

    const trainer::EvalReport r = t.evaluate(cfg.eval_episodes);
    write_evaluation(dir, cfg, seed, r);

    const std::vector<double> rewards = metric_column(metrics, "reward_mean");
    const std::size_t w = std::min<std::size_t>(20, rewards.size());
    double ma = 0.0;
    for (std::size_t i = rewards.size() - w; i < rewards.size(); ++i) ma += rewards[i];
    ma /= static_cast<double>(std::max<std::size_t>(w, 1));
    const auto conv = trainer::convergence_iteration(rewards);
    summary << hash << ',' << seed << ',' << trainer::to_string(cfg.policy) << ',' << rewards.size() << ','
            << format_double(ma) << ',' << (conv ? std::to_string(*conv) : "") << ','
            << format_double(r.latency.mean) << ',' << format_double(r.latency.se) << ','
            << format_double(r.accuracy.mean) << ',' << format_double(r.hallucination.mean) << ','
            << format_double(r.energy.mean) << ',' << format_double(r.reward.mean) << ','
            << format_double(r.accuracy_satisfaction) << ',' << format_double(r.hallucination_satisfaction)
            << ',' << format_double(r.qos_satisfaction) << '\n';
  }
  write_text(cfg.output_dir / "summary.csv", summary.str());
  return 0;
}

int cmd_evaluate(const Options& o) {
  const trainer::RunConfig cfg = load_config(o);
  for (std::uint64_t seed : cfg.seeds) {
    const fs::path dir = seed_dir(cfg, seed);
    trainer::Trainer t(cfg, seed);
    if (trainer::is_learned(cfg.policy)) {
      const fs::path ckpt = o.checkpoint.empty() ? dir / "checkpoints" / "latest.ckpt" : fs::path(o.checkpoint);
      if (!fs::exists(ckpt)) throw UsageError("checkpoint not found: " + ckpt.string());
      t.load(ckpt);
    }
    write_evaluation(dir, cfg, seed, t.evaluate(cfg.eval_episodes));
  }
  return 0;
}

int cmd_compare(const Options& o) {
  const trainer::RunConfig base = load_config(o);
  const std::string hash = trainer::config_hash(base);
  const std::string seeds = join_seeds(base.seeds);
  const trainer::Policy policies[] = {trainer::Policy::kWmPpo, trainer::Policy::kPpo,
                                      trainer::Policy::kAlwaysLocal, trainer::Policy::kAlwaysOffload};
  std::ostringstream runs, table, curves;
  runs << csv_header(hash, seeds)
       << "config_hash,K,policy,seed,latency_s,latency_se,accuracy,accuracy_se,hallucination,hallucination_se,"
          "energy_j,reward,qos_satisfaction\n";
  table << csv_header(hash, seeds)
        << "config_hash,K,policy,seeds,mean_latency_s,latency_se_across_seeds,mean_accuracy,mean_hallucination,"
           "mean_energy_j,mean_reward,mean_qos_satisfaction\n";
  curves << csv_header(hash, seeds) << "config_hash,K,policy,seed,episode,reward_mean,latency_s,accuracy,hallucination\n";
  for (std::size_t k : base.compare_mlus) {
    trainer::RunConfig cfg = base;
    cfg.system = trainer::with_num_mlus(base.system, k);
    for (trainer::Policy p : policies) {
      cfg.policy = p;
      std::vector<double> lat, acc, hal, en, rew, qos;
      for (std::uint64_t seed : base.seeds) {
        trainer::Trainer t(cfg, seed);
        const auto rows = t.run(cfg.iterations);
        for (const auto& m : rows) {
          curves << hash << ',' << k << ',' << trainer::to_string(p) << ',' << seed << ',' << m.iteration << ','
                 << format_double(m.episode.reward_mean) << ',' << format_double(m.episode.latency) << ','
                 << format_double(m.episode.accuracy) << ',' << format_double(m.episode.hallucination) << '\n';
        }
        const trainer::EvalReport r = t.evaluate(cfg.eval_episodes);
        runs << hash << ',' << k << ',' << trainer::to_string(p) << ',' << seed << ','
             << format_double(r.latency.mean) << ',' << format_double(r.latency.se) << ','
             << format_double(r.accuracy.mean) << ',' << format_double(r.accuracy.se) << ','
             << format_double(r.hallucination.mean) << ',' << format_double(r.hallucination.se) << ','
             << format_double(r.energy.mean) << ',' << format_double(r.reward.mean) << ','
             << format_double(r.qos_satisfaction) << '\n';
        lat.push_back(r.latency.mean);
        acc.push_back(r.accuracy.mean);
        hal.push_back(r.hallucination.mean);
        en.push_back(r.energy.mean);
        rew.push_back(r.reward.mean);
        qos.push_back(r.qos_satisfaction);
      }
      const trainer::MeanSe l = trainer::mean_se(lat);
      table << hash << ',' << k << ',' << trainer::to_string(p) << ',' << base.seeds.size() << ','
            << format_double(l.mean) << ',' << format_double(l.se) << ','
            << format_double(trainer::mean_se(acc).mean) << ',' << format_double(trainer::mean_se(hal).mean) << ','
            << format_double(trainer::mean_se(en).mean) << ',' << format_double(trainer::mean_se(rew).mean) << ','
            << format_double(trainer::mean_se(qos).mean) << '\n';
    }
  }
  write_json(base.output_dir / "config.json", {{"config_hash", hash},
                                               {"seeds", base.seeds},
                                               {"config", trainer::to_json(base)}});
  write_text(base.output_dir / "compare_runs.csv", runs.str());
  write_text(base.output_dir / "compare_latency.csv", table.str());
  write_text(base.output_dir / "compare_episodes.csv", curves.str());
  return 0;
}

struct Check {
  std::string name;
  bool passed;
  std::string detail;
};

int cmd_env_check(const Options& o) {
  const trainer::RunConfig cfg = load_config(o);
  const std::string hash = trainer::config_hash(cfg);
  const std::uint64_t seed = cfg.seeds.front();
  const env::SystemConfig& s = cfg.system;
  std::vector<Check> checks;

  // Uniform random unit actions from a dedicated stream.
  Rng action_rng(seed, 20);
  const std::size_t width = 2 * s.num_mlus;
  const trainer::Actor random_actor = [&](std::span<const double>) {
    trainer::ActionSample a;
    a.unit.resize(width);
    for (double& u : a.unit) u = action_rng.uniform();
    a.raw.assign(width, 0.0);
    a.noise.assign(width, 0.0);
    return a;
  };
  env::MecEnv e(s, seed);
  std::vector<std::vector<env::StepOutcome>> episodes;
  const std::size_t n_episodes = 5;
  bool finite = true, ranges = true, reward_ok = true;
  for (std::size_t ep = 0; ep < n_episodes; ++ep) {
    auto c = trainer::collect(e, random_actor, s.slots);
    for (const auto& out : c.outcomes) {
      reward_ok = reward_ok && out.reward > 0.0 && std::isfinite(out.reward);
      for (const auto& d : out.mlus) {
        finite = finite && std::isfinite(d.latency) && std::isfinite(d.energy()) && d.latency >= 0.0 &&
                 d.energy() >= 0.0;
        ranges = ranges && d.accuracy >= 0.0 && d.accuracy <= 1.0 && d.hallucination >= 0.0 &&
                 d.hallucination <= 1.0 && d.alpha >= 0.0 && d.alpha <= 1.0 && d.power_w >= 0.0;
      }
    }
    if (c.outcomes.size() != s.slots || !c.outcomes.back().done) {
      checks.push_back({"episode_length", false, "episode " + std::to_string(ep) + " did not end at T"});
    }
    episodes.push_back(std::move(c.outcomes));
  }
  checks.push_back({"latency_energy_finite_nonnegative", finite, ""});
  checks.push_back({"qos_and_actions_in_range", ranges, ""});
  checks.push_back({"reward_positive", reward_ok, ""});

  env::MecEnv a(s, seed), b(s, seed);
  const trainer::Actor fixed = trainer::constant_actor(std::vector<double>(width, 0.5));
  const auto ca = trainer::collect(a, fixed, s.slots), cb = trainer::collect(b, fixed, s.slots);
  checks.push_back({"seeded_replay_identical", ca.traj.rewards == cb.traj.rewards && ca.traj.states == cb.traj.states,
                    ""});

  const auto off = trainer::run_baseline(trainer::Policy::kAlwaysOffload, s, seed, 5);
  const auto loc = trainer::run_baseline(trainer::Policy::kAlwaysLocal, s, seed, 5);
  checks.push_back({"always_offload_accuracy_is_a_mec", std::abs(off.accuracy.mean - s.qos.a_mec) <= 1e-12,
                    format_double(off.accuracy.mean)});
  checks.push_back({"always_offload_alpha_one", off.alpha.mean == 1.0, ""});
  checks.push_back({"always_local_alpha_zero", loc.alpha.mean == 0.0, ""});

  bool all = true;
  json arr = json::array();
  for (const auto& c : checks) {
    all = all && c.passed;
    arr.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  write_json(cfg.output_dir / "env_check.json",
             {{"config_hash", hash}, {"seed", seed}, {"passed", all}, {"checks", arr},
              {"always_local", trainer::to_json(loc)}, {"always_offload", trainer::to_json(off)},
              {"system", env::to_json(s)}});
  env::write_trace_csv(cfg.output_dir / "env_trace.csv", hash, seed, episodes);
  if (!all) throw std::runtime_error("env-check failed; see " + (cfg.output_dir / "env_check.json").string());
  return 0;
}

int cmd_compress(const Options& o) {
  if (o.config.empty()) throw UsageError("--config is required");
  if (!fs::exists(o.config)) throw UsageError("config file not found: " + o.config);
  std::ifstream is(o.config);
  ecld::EcldConfig cfg;
  try {
    cfg = ecld::ecld_config_from_json(json::parse(is), fs::path(o.config).parent_path());
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (o.seed) cfg.seed = *o.seed;
  const fs::path out = o.out.empty() ? fs::path("runs") : fs::path(o.out);
  json echo = ecld::to_json(cfg);
  const std::string hash = hex64(fnv1a64(echo.dump()));
  const ecld::CompressionReport r = ecld::run_ecld(cfg);
  write_json(out / "compression_report.json",
             {{"config_hash", hash},
              {"seed", cfg.seed},
              {"table_row",
               {{"hallucination", r.offline_hallucination},
                {"accuracy", r.offline_accuracy},
                {"accessibility_mb", r.accessibility_mb},
                {"energy_wh", r.energy_wh}}},
              {"report", ecld::to_json(r)},
              {"deployment", ecld::deployment_report(r)},
              {"config", echo}});
  return 0;
}

int cmd_profile_catalog(const Options& o) {
  const ecld::ProfileCatalog catalog = o.config.empty() ? ecld::builtin_catalog() : ecld::load_catalog(o.config);
  const json j = ecld::to_json(catalog);
  const std::string hash = hex64(fnv1a64(j.dump()));
  const std::uint64_t seed = o.seed.value_or(0);
  const fs::path out = o.out.empty() ? fs::path("runs") : fs::path(o.out);
  write_json(out / "profiles.json", {{"config_hash", hash}, {"seed", seed}, {"profiles", j}});
  std::ostringstream csv;
  csv << csv_header(hash, std::to_string(seed))
      << "name,offline_accuracy,offline_hallucination,storage_mb,energy_wh\n";
  for (const auto& [name, p] : catalog) {
    csv << name << ',' << format_double(p.offline_accuracy) << ',' << format_double(p.offline_hallucination) << ','
        << format_double(p.storage_mb) << ',' << format_double(p.energy_wh) << '\n';
  }
  write_text(out / "profiles.csv", csv.str());
  return 0;
}

void report_error(const std::string& command, const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", {{"command", command}, {"kind", kind}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compact-LLM mobile-edge offloading simulator and world-model PPO trainer"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* sub, bool need_config) {
    auto* c = sub->add_option("--config", o.config, "Config file");
    if (need_config) c->required();
    sub->add_option("--seed", o.seed, "Seed override");
    sub->add_option("--out", o.out, "Output directory");
  };
  auto add_run = [&o](CLI::App* sub) {
    sub->add_option("--baseline", o.baseline, "Policy override: wm-ppo, ppo, always-local or always-offload");
    sub->add_option("--iterations", o.iterations, "Training iterations override");
  };

  auto* compress = app.add_subcommand("compress", "Run the compression pipeline on the toy network");
  add_common(compress, true);
  auto* env_check = app.add_subcommand("env-check", "Run environment sanity checks and write a trace");
  add_common(env_check, true);
  auto* train = app.add_subcommand("train", "Train a policy and write metrics and checkpoints");
  add_common(train, true);
  add_run(train);
  train->add_flag("--resume", o.resume, "Continue from <out>/seed-<seed>/checkpoints/latest.ckpt");
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint or a static baseline");
  add_common(evaluate, true);
  add_run(evaluate);
  evaluate->add_option("--checkpoint", o.checkpoint, "Checkpoint file");
  auto* compare = app.add_subcommand("compare", "Train and evaluate every policy on shared seeds");
  add_common(compare, true);
  add_run(compare);
  auto* catalog = app.add_subcommand("profile-catalog", "Write the variant profile catalog");
  add_common(catalog, false);

  std::string command = "mecllm";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error(command, "usage", e.what());
    return 2;
  }

  for (const auto* sub : app.get_subcommands()) command = sub->get_name();
  try {
    if (compress->parsed()) return cmd_compress(o);
    if (env_check->parsed()) return cmd_env_check(o);
    if (train->parsed()) return cmd_train(o);
    if (evaluate->parsed()) return cmd_evaluate(o);
    if (compare->parsed()) return cmd_compare(o);
    if (catalog->parsed()) return cmd_profile_catalog(o);
  } catch (const UsageError& e) {
    report_error(command, "config", e.what());
    return 2;
  } catch (const std::exception& e) {
    report_error(command, "runtime", e.what());
    return 1;
  }
  return 1;
}
