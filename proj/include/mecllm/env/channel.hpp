#pragma once

#include <cstddef>
#include <span>
#include <utility>

#include "mecllm/core/rng.hpp"

namespace mecllm::env {

double distance(std::pair<double, double> mlu, std::pair<double, double> mec, double mec_height_m);

// Normalized Rician power gain |sqrt(k/(k+1)) + sqrt(1/(k+1)) * g|^2 with
// g ~ CN(0, 1); unit mean.
double rician_fading(double rician_k, Rng& rng);

// (g0 / d^2) * fading; deterministic mode uses fading = 1 and draws nothing.
double channel_gain(double d, double ref_gain, double rician_k, Rng& rng, bool deterministic = false);

// B log2(1 + p_k h_k / (sum_{l != k} p_l h_l + noise)).
double uplink_rate(std::size_t k, std::span<const double> powers, std::span<const double> gains,
                   double bandwidth_hz, double noise_power_w);

// Uniform point in a disc of the given radius centred on the origin.
std::pair<double, double> sample_in_disc(double radius, Rng& rng);

}  // namespace mecllm::env
