#include "mecllm/env/qos.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mecllm::env {

namespace {

double beta_around(double mean, double concentration, Rng& rng) {
  if (mean <= 0.0) return 0.0;
  if (mean >= 1.0) return 1.0;
  return std::clamp(rng.beta(mean * concentration, (1.0 - mean) * concentration), 0.0, 1.0);
}

}  // namespace

Qos qos_blend(double alpha, double a_local, double h_local, double a_mec, double h_mec) {
  return {alpha * a_mec + (1.0 - alpha) * a_local, alpha * h_mec + (1.0 - alpha) * h_local};
}

Qos sample_slot_qos(const ecld::VariantProfile& profile, double concentration, Rng& rng) {
  if (!(concentration > 0.0) || std::isinf(concentration)) {
    return {profile.offline_accuracy, profile.offline_hallucination};
  }
  const double a = beta_around(profile.offline_accuracy, concentration, rng);
  const double h = beta_around(profile.offline_hallucination, concentration, rng);
  return {a, h};
}

PenaltyTerms penalty(std::span<const double> accuracy, std::span<const double> hallucination,
                     std::span<const double> energy_j, std::span<const double> energy_budget_j,
                     double a_min, double h_max) {
  const std::size_t k = accuracy.size();
  if (k == 0 || hallucination.size() != k || energy_j.size() != k || energy_budget_j.size() != k) {
    throw std::invalid_argument("penalty: per-MLU inputs must share a nonzero length");
  }
  const double kd = static_cast<double>(k);
  const double sum_a = std::accumulate(accuracy.begin(), accuracy.end(), 0.0);
  const double sum_h = std::accumulate(hallucination.begin(), hallucination.end(), 0.0);
  const double sum_e = std::accumulate(energy_j.begin(), energy_j.end(), 0.0);
  const double budget = std::accumulate(energy_budget_j.begin(), energy_budget_j.end(), 0.0);
  return {std::max(kd * a_min - sum_a, 0.0), std::max(sum_h - kd * h_max, 0.0),
          std::max(sum_e - budget, 0.0)};
}

}  // namespace mecllm::env
