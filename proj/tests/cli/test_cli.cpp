#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "support/cli_runner.hpp"

using nlohmann::json;
using mecllm::testing::run_cli;
using mecllm::testing::scratch_dir;
using mecllm::testing::slurp;
namespace fs = std::filesystem;

namespace {

const std::string kCli = MECLLM_CLI;
const fs::path kConfigs = fs::path(MECLLM_DATA_DIR) / "configs";
const std::string kSmoke = (kConfigs / "smoke.json").string();

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

// compress.json with absolute corpus paths and a patch applied.
std::string compress_config(const fs::path& dir, const std::string& name, const json& patch) {
  std::ifstream is(kConfigs / "compress.json");
  json j = json::parse(is);
  for (auto& [key, rel] : j["corpora"].items()) rel = (kConfigs / rel.get<std::string>()).lexically_normal().string();
  j.merge_patch(patch);
  const fs::path p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p.string();
}

}  // namespace

TEST_CASE("smoke training writes one metric row per iteration") {
  const fs::path dir = scratch_dir("cli_smoke");
  const auto r = run_cli(kCli, "train --config " + kSmoke + " --out run", dir);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  const auto rows = lines(slurp(dir / "run/seed-1/metrics.jsonl"));
  REQUIRE(rows.size() == 5);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const json row = json::parse(rows[i]);
    CHECK(row.at("iteration") == i + 1);
    CHECK(row.at("seed") == 1);
    CHECK(row.at("config_hash").get<std::string>().size() == 16);
  }
  const json echo = json::parse(slurp(dir / "run/seed-1/config.json"));
  CHECK(echo.at("config").at("trainer").at("iterations") == 5);
  const json eval = json::parse(slurp(dir / "run/seed-1/eval.json"));
  CHECK(eval.at("config_hash") == echo.at("config_hash"));
  CHECK(eval.at("episodes") == 5);
  CHECK(fs::exists(dir / "run/seed-1/checkpoints/latest.ckpt"));
  CHECK(slurp(dir / "run/summary.csv").rfind("# config_hash=" + echo.at("config_hash").get<std::string>(), 0) == 0);
}

TEST_CASE("a seed reproduces metric files byte for byte") {
  const fs::path dir = scratch_dir("cli_determinism");
  REQUIRE(run_cli(kCli, "train --config " + kSmoke + " --seed 4 --out a", dir).exit_code == 0);
  REQUIRE(run_cli(kCli, "train --config " + kSmoke + " --seed 4 --out b", dir).exit_code == 0);
  REQUIRE(run_cli(kCli, "train --config " + kSmoke + " --seed 5 --out c", dir).exit_code == 0);
  for (const char* f : {"seed-4/metrics.jsonl", "seed-4/eval.json", "seed-4/eval_episodes.csv", "summary.csv"}) {
    CHECK_MESSAGE(slurp(dir / "a" / f) == slurp(dir / "b" / f), f);
  }
  CHECK(slurp(dir / "a/seed-4/metrics.jsonl") != slurp(dir / "c/seed-5/metrics.jsonl"));
}

TEST_CASE("a resumed run continues numbering and matches an uninterrupted run") {
  const fs::path dir = scratch_dir("cli_resume");
  REQUIRE(run_cli(kCli, "train --config " + kSmoke + " --out full", dir).exit_code == 0);
  REQUIRE(run_cli(kCli, "train --config " + kSmoke + " --out part --iterations 3", dir).exit_code == 0);
  CHECK(lines(slurp(dir / "part/seed-1/metrics.jsonl")).size() == 3);
  const auto r = run_cli(kCli, "train --config " + kSmoke + " --out part --resume", dir);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  const auto rows = lines(slurp(dir / "part/seed-1/metrics.jsonl"));
  REQUIRE(rows.size() == 5);
  CHECK(json::parse(rows[3]).at("iteration") == 4);
  CHECK(slurp(dir / "part/seed-1/metrics.jsonl") == slurp(dir / "full/seed-1/metrics.jsonl"));
  CHECK(slurp(dir / "part/seed-1/eval.json") == slurp(dir / "full/seed-1/eval.json"));
}

TEST_CASE("failures exit nonzero with a json error record") {
  const fs::path dir = scratch_dir("cli_errors");
  for (const std::string& args : std::vector<std::string>{"train --config missing.json",
                                                         "train --config " + kSmoke + " --baseline td3",
                                                         "evaluate --config " + kSmoke + " --out empty", "frobnicate"}) {
    const auto r = run_cli(kCli, args, dir);
    CHECK_MESSAGE(r.exit_code != 0, args);
    const json err = json::parse(lines(r.err).back());
    CHECK(err.at("error").contains("message"));
    CHECK(err.at("error").contains("kind"));
  }
  std::ofstream(dir / "bad.json") << R"({"trainer": {"iterations": 5, "typo": 1}})";
  const auto r = run_cli(kCli, "train --config bad.json", dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("trainer.typo") != std::string::npos);
}

TEST_CASE("evaluate reloads the trained checkpoint") {
  const fs::path dir = scratch_dir("cli_evaluate");
  REQUIRE(run_cli(kCli, "train --config " + kSmoke + " --out run", dir).exit_code == 0);
  const std::string trained = slurp(dir / "run/seed-1/eval.json");
  fs::remove(dir / "run/seed-1/eval.json");
  REQUIRE(run_cli(kCli, "evaluate --config " + kSmoke + " --out run", dir).exit_code == 0);
  CHECK(slurp(dir / "run/seed-1/eval.json") == trained);
  REQUIRE(run_cli(kCli, "evaluate --config " + kSmoke + " --out base --baseline always-offload", dir).exit_code == 0);
  CHECK(json::parse(slurp(dir / "base/seed-1/eval.json")).at("alpha").at("mean") == 1.0);
}

TEST_CASE("compress reports the four table fields") {
  const fs::path dir = scratch_dir("cli_compress");
  const std::string q4 = compress_config(dir, "q4.json", {{"quantization", {{"bits", 4}}}});
  const std::string q8 = compress_config(dir, "q8.json", {{"quantization", {{"bits", 8}}}});
  const std::string no_prune =
      compress_config(dir, "theta0.json", {{"pruning", {{"theta_width", 0.0}, {"theta_depth", 0.0}}}});
  REQUIRE(run_cli(kCli, "compress --config " + q4 + " --out q4", dir).exit_code == 0);
  REQUIRE(run_cli(kCli, "compress --config " + q8 + " --out q8", dir).exit_code == 0);
  REQUIRE(run_cli(kCli, "compress --config " + no_prune + " --out t0", dir).exit_code == 0);
  const json r4 = json::parse(slurp(dir / "q4/compression_report.json"));
  const json r8 = json::parse(slurp(dir / "q8/compression_report.json"));
  const json t0 = json::parse(slurp(dir / "t0/compression_report.json"));
  for (const char* k : {"hallucination", "accuracy", "accessibility_mb", "energy_wh"}) {
    CHECK(r4.at("table_row").contains(k));
  }
  CHECK(r4.contains("config_hash"));
  CHECK(r4.at("seed") == 7);
  CHECK(t0.at("report").at("masks").at("pruned_parameters") == 0);
  CHECK(r8.at("report").at("quantization").at("error").get<double>() <=
        r4.at("report").at("quantization").at("error").get<double>());
}

TEST_CASE("compare tables are deterministic and ordered") {
  const fs::path dir = scratch_dir("cli_compare");
  REQUIRE(run_cli(kCli, "compare --config " + kSmoke + " --iterations 2 --out a", dir).exit_code == 0);
  REQUIRE(run_cli(kCli, "compare --config " + kSmoke + " --iterations 2 --out b", dir).exit_code == 0);
  for (const char* f : {"compare_latency.csv", "compare_runs.csv", "compare_episodes.csv"}) {
    CHECK_MESSAGE(slurp(dir / "a" / f) == slurp(dir / "b" / f), f);
  }
  const auto table = lines(slurp(dir / "a/compare_latency.csv"));
  REQUIRE(table.size() == 2 + 2 * 4);
  CHECK(table[0].rfind("# config_hash=", 0) == 0);
  CHECK(table[1].find("mean_latency_s") != std::string::npos);
  // Columns: hash, K, policy, seeds, latency, se, accuracy, ...
  auto column = [](const std::string& row, std::size_t i) {
    std::istringstream is(row);
    std::string cell;
    for (std::size_t c = 0; c <= i; ++c) std::getline(is, cell, ',');
    return cell;
  };
  for (std::size_t k = 0; k < 2; ++k) {
    const std::string local = table[2 + 4 * k + 2], offload = table[2 + 4 * k + 3];
    REQUIRE(column(local, 2) == "always-local");
    REQUIRE(column(offload, 2) == "always-offload");
    CHECK(std::stod(column(offload, 6)) >= std::stod(column(local, 6)));
  }
}

TEST_CASE("env-check passes on the smoke system and writes a trace") {
  const fs::path dir = scratch_dir("cli_env_check");
  const auto r = run_cli(kCli, "env-check --config " + kSmoke + " --out out", dir);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  const json j = json::parse(slurp(dir / "out/env_check.json"));
  CHECK(j.at("passed") == true);
  CHECK(j.at("seed") == 1);
  const auto trace = lines(slurp(dir / "out/env_trace.csv"));
  CHECK(trace.size() == 2 + 5 * 10 * 2);
}

TEST_CASE("profile catalog lists the built-in variants") {
  const fs::path dir = scratch_dir("cli_profiles");
  REQUIRE(run_cli(kCli, "profile-catalog --out out", dir).exit_code == 0);
  const json j = json::parse(slurp(dir / "out/profiles.json"));
  CHECK(j.at("profiles").size() == 5);
  CHECK(lines(slurp(dir / "out/profiles.csv")).size() == 2 + 5);
}
