#pragma once

#include <span>

#include "mecllm/core/rng.hpp"
#include "mecllm/ecld/profiles.hpp"

namespace mecllm::env {

struct Qos {
  double accuracy = 0.0;
  double hallucination = 0.0;
};

// Linear blend alpha * MEC + (1 - alpha) * local for both metrics.
Qos qos_blend(double alpha, double a_local, double h_local, double a_mec, double h_mec);

// Per-slot local QoS: Beta draws with the profile's offline values as means
// and the given concentration (a + b). Concentration <= 0 or infinite returns
// the means exactly. Means of 0 or 1 are returned without drawing.
Qos sample_slot_qos(const ecld::VariantProfile& profile, double concentration, Rng& rng);

struct PenaltyTerms {
  double accuracy = 0.0;
  double hallucination = 0.0;
  double energy = 0.0;
  double total() const { return accuracy + hallucination + energy; }
};

// Sum-form hinge penalty over all MLUs:
//   max(K A_min - sum A, 0) + max(sum H - K H_max, 0) + max(sum E - sum E_max, 0).
PenaltyTerms penalty(std::span<const double> accuracy, std::span<const double> hallucination,
                     std::span<const double> energy_j, std::span<const double> energy_budget_j,
                     double a_min, double h_max);

}  // namespace mecllm::env
