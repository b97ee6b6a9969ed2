#include "mecllm/env/config.hpp"

#include <cmath>
#include <stdexcept>

namespace mecllm::env {

namespace {

void positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string("config: ") + field + " must be > 0");
  }
}

void unit_interval(double v, const char* field) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string("config: ") + field + " must lie in [0, 1]");
  }
}

// Reads `<base>_w` (linear) or `<base>_dbm`; returns fallback if neither is set.
double power_field(const nlohmann::json& j, const std::string& base, double fallback) {
  if (j.contains(base + "_w")) return j[base + "_w"].get<double>();
  if (j.contains(base + "_dbm")) return dbm_to_watts(j[base + "_dbm"].get<double>());
  return fallback;
}

}  // namespace

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

SystemConfig SystemConfig::defaults(std::size_t num_mlus) {
  SystemConfig c;
  c.num_mlus = num_mlus;
  c.noise_power_w = dbm_to_watts(-104.0);
  c.ref_gain = db_to_linear(-30.0);
  MluConfig m;
  m.p_max_w = dbm_to_watts(33.0);
  c.mlus.assign(num_mlus, m);
  const auto catalog = ecld::builtin_catalog();
  c.qos.local = ecld::find_profile(catalog, "llama3.1-8b/quantization");
  c.qos.edge = ecld::find_profile(catalog, "llama3.1-8b/original");
  return c;
}

void SystemConfig::validate() const {
  if (num_mlus < 1) throw std::invalid_argument("config: K must be >= 1");
  if (slots < 1) throw std::invalid_argument("config: T must be >= 1");
  positive(bandwidth_hz, "bandwidth_hz");
  positive(noise_power_w, "noise_power_w");
  positive(rician_k, "rician_k");
  positive(ref_gain, "ref_gain");
  if (!(mec_height_m >= 0.0)) throw std::invalid_argument("config: mec_height_m must be >= 0");
  positive(mec_freq_hz, "mec_freq_hz");
  positive(cycles_per_bit, "cycles_per_bit");
  positive(mec_cycles_per_bit, "mec_cycles_per_bit");
  positive(energy_coeff, "energy_coeff");
  positive(radius_m, "radius_m");
  positive(slot_cap_s, "slot_cap_s");
  if (mlus.size() != num_mlus) throw std::invalid_argument("config: need one MLU entry per user");
  for (const auto& m : mlus) {
    positive(m.cpu_freq_hz, "cpu_freq_hz");
    positive(m.p_max_w, "p_max_w");
    positive(m.e_max_j, "e_max_j");
  }
  if (!positions.empty() && positions.size() != num_mlus) {
    throw std::invalid_argument("config: positions must list one (x, y) per MLU");
  }
  positive(task.min_bits, "task_size_bits.min");
  if (task.max_bits < task.min_bits) {
    throw std::invalid_argument("config: task_size_bits.max must be >= min");
  }
  qos.local.validate();
  qos.edge.validate();
  unit_interval(qos.a_mec, "qos.a_mec");
  unit_interval(qos.resolved_h_mec(), "qos.h_mec");
  unit_interval(qos.a_min, "qos.a_min");
  unit_interval(qos.h_max, "qos.h_max");
  if (!(qos.penalty_weight >= 0.0)) throw std::invalid_argument("config: penalty_weight must be >= 0");
}

SystemConfig system_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  SystemConfig c = SystemConfig::defaults(j.value("K", std::size_t{2}));
  c.slots = j.value("T", c.slots);
  c.bandwidth_hz = j.value("bandwidth_hz", c.bandwidth_hz);
  c.noise_power_w = power_field(j, "noise_power", c.noise_power_w);
  c.rician_k = j.value("rician_k", c.rician_k);
  if (j.contains("ref_gain_linear")) c.ref_gain = j["ref_gain_linear"].get<double>();
  if (j.contains("ref_gain_db")) c.ref_gain = db_to_linear(j["ref_gain_db"].get<double>());
  c.mec_height_m = j.value("mec_height_m", c.mec_height_m);
  c.mec_freq_hz = j.value("mec_freq_hz", c.mec_freq_hz);
  c.cycles_per_bit = j.value("cycles_per_bit", c.cycles_per_bit);
  c.mec_cycles_per_bit = j.value("mec_cycles_per_bit", c.cycles_per_bit);
  c.energy_coeff = j.value("energy_coeff", c.energy_coeff);
  c.radius_m = j.value("radius_m", c.radius_m);
  c.slot_cap_s = j.value("slot_cap_s", c.slot_cap_s);
  if (j.contains("channel")) {
    const auto mode = j["channel"].get<std::string>();
    if (mode != "rician" && mode != "deterministic") {
      throw std::invalid_argument("config: channel must be \"rician\" or \"deterministic\"");
    }
    c.deterministic_channel = mode == "deterministic";
  }
  if (j.contains("mlu")) {
    const auto& m = j["mlu"];
    for (auto& mlu : c.mlus) {
      mlu.cpu_freq_hz = m.value("cpu_freq_hz", mlu.cpu_freq_hz);
      mlu.p_max_w = power_field(m, "p_max", mlu.p_max_w);
      mlu.e_max_j = m.value("e_max_j", mlu.e_max_j);
    }
  }
  if (j.contains("mlus")) {
    const auto& arr = j["mlus"];
    if (arr.size() != c.num_mlus) throw std::invalid_argument("config: mlus must list K entries");
    for (std::size_t k = 0; k < c.num_mlus; ++k) {
      auto& mlu = c.mlus[k];
      mlu.cpu_freq_hz = arr[k].value("cpu_freq_hz", mlu.cpu_freq_hz);
      mlu.p_max_w = power_field(arr[k], "p_max", mlu.p_max_w);
      mlu.e_max_j = arr[k].value("e_max_j", mlu.e_max_j);
    }
  }
  if (j.contains("positions")) {
    for (const auto& p : j["positions"]) c.positions.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  }
  if (j.contains("task_size_bits")) {
    const auto& t = j["task_size_bits"];
    if (t.is_number()) {
      c.task.min_bits = c.task.max_bits = t.get<double>();
    } else {
      c.task.min_bits = t.value("min", c.task.min_bits);
      c.task.max_bits = t.value("max", c.task.max_bits);
    }
  }
  if (j.contains("qos")) {
    const auto& q = j["qos"];
    ecld::ProfileCatalog catalog = ecld::builtin_catalog();
    if (q.contains("catalog")) {
      std::filesystem::path p = q["catalog"].get<std::string>();
      catalog = ecld::load_catalog(p.is_absolute() ? p : base_dir / p);
    }
    if (q.contains("local_profile")) c.qos.local = ecld::find_profile(catalog, q["local_profile"].get<std::string>());
    if (q.contains("edge_profile")) c.qos.edge = ecld::find_profile(catalog, q["edge_profile"].get<std::string>());
    c.qos.a_mec = q.value("a_mec", c.qos.a_mec);
    if (q.contains("h_mec") && !q["h_mec"].is_null()) c.qos.h_mec = q["h_mec"].get<double>();
    c.qos.a_min = q.value("a_min", c.qos.a_min);
    c.qos.h_max = q.value("h_max", c.qos.h_max);
    c.qos.penalty_weight = q.value("penalty_weight", c.qos.penalty_weight);
    c.qos.concentration = q.value("concentration", c.qos.concentration);
  }
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

nlohmann::json to_json(const SystemConfig& c) {
  nlohmann::json mlus = nlohmann::json::array();
  for (const auto& m : c.mlus) {
    mlus.push_back({{"cpu_freq_hz", m.cpu_freq_hz}, {"p_max_w", m.p_max_w}, {"e_max_j", m.e_max_j}});
  }
  nlohmann::json positions = nlohmann::json::array();
  for (const auto& [x, y] : c.positions) positions.push_back({x, y});
  return {
      {"K", c.num_mlus},
      {"T", c.slots},
      {"bandwidth_hz", c.bandwidth_hz},
      {"noise_power_w", c.noise_power_w},
      {"rician_k", c.rician_k},
      {"ref_gain_linear", c.ref_gain},
      {"mec_height_m", c.mec_height_m},
      {"mec_freq_hz", c.mec_freq_hz},
      {"cycles_per_bit", c.cycles_per_bit},
      {"mec_cycles_per_bit", c.mec_cycles_per_bit},
      {"energy_coeff", c.energy_coeff},
      {"radius_m", c.radius_m},
      {"slot_cap_s", c.slot_cap_s},
      {"channel", c.deterministic_channel ? "deterministic" : "rician"},
      {"mlus", mlus},
      {"positions", positions},
      {"task_size_bits", {{"min", c.task.min_bits}, {"max", c.task.max_bits}}},
      {"qos",
       {{"local_profile", c.qos.local.name},
        {"local", ecld::to_json(c.qos.local)},
        {"edge_profile", c.qos.edge.name},
        {"edge", ecld::to_json(c.qos.edge)},
        {"a_mec", c.qos.a_mec},
        {"h_mec", c.qos.resolved_h_mec()},
        {"a_min", c.qos.a_min},
        {"h_max", c.qos.h_max},
        {"penalty_weight", c.qos.penalty_weight},
        {"concentration", c.qos.concentration}}},
      {"seed", c.seed},
  };
}

}  // namespace mecllm::env
