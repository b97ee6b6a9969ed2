#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mecllm/ecld/profiles.hpp"

namespace mecllm::env {

double dbm_to_watts(double dbm);
double db_to_linear(double db);

struct MluConfig {
  double cpu_freq_hz = 2e9;
  double p_max_w = 0.0;  // set from 33 dBm in SystemConfig::defaults
  double e_max_j = 2.0;
};

// Uniform task size in bits; min == max gives a constant size.
struct TaskSizeConfig {
  double min_bits = 1.0e6;
  double max_bits = 2.5e6;
};

struct QosConfig {
  ecld::VariantProfile local;
  ecld::VariantProfile edge;
  double a_mec = 1.0;
  // Defaults to edge.offline_hallucination when unset.
  std::optional<double> h_mec;
  double a_min = 0.6;
  double h_max = 0.78;
  double penalty_weight = 30.0;
  // Beta concentration for per-slot local QoS; <= 0 returns profile means.
  double concentration = 50.0;

  double resolved_h_mec() const { return h_mec ? *h_mec : edge.offline_hallucination; }
};

// All quantities in SI units (W, Hz, m, s, J, bits).
struct SystemConfig {
  std::size_t num_mlus = 2;
  std::size_t slots = 100;
  double bandwidth_hz = 10e6;
  double noise_power_w = 0.0;
  double rician_k = 8.0;
  double ref_gain = 0.0;
  double mec_height_m = 10.0;
  double mec_freq_hz = 1e10;
  double cycles_per_bit = 900.0;
  double mec_cycles_per_bit = 900.0;
  double energy_coeff = 1e-28;
  double radius_m = 20.0;
  double slot_cap_s = 10.0;
  // Line-of-sight only: channel gain is exactly g0 / d^2.
  bool deterministic_channel = false;
  std::vector<MluConfig> mlus;
  // Fixed (x, y) per MLU; empty means resample uniformly in the disc at reset.
  std::vector<std::pair<double, double>> positions;
  TaskSizeConfig task;
  QosConfig qos;
  std::uint64_t seed = 0;

  static SystemConfig defaults(std::size_t num_mlus = 2);
  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// Keys absent from j keep their defaults. Power and gain fields accept either
// linear (`*_w`, `*_linear`) or logarithmic (`*_dbm`, `*_db`) spellings.
SystemConfig system_config_from_json(const nlohmann::json& j,
                                     const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const SystemConfig& c);

}  // namespace mecllm::env
