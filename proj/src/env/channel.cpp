#include "mecllm/env/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mecllm::env {

double distance(std::pair<double, double> mlu, std::pair<double, double> mec, double mec_height_m) {
  const double dx = mlu.first - mec.first;
  const double dy = mlu.second - mec.second;
  return std::sqrt(dx * dx + dy * dy + mec_height_m * mec_height_m);
}

double rician_fading(double rician_k, Rng& rng) {
  const double los = std::sqrt(rician_k / (rician_k + 1.0));
  const double nlos = std::sqrt(1.0 / (rician_k + 1.0));
  const double re = rng.normal() / std::numbers::sqrt2;
  const double im = rng.normal() / std::numbers::sqrt2;
  const double a = los + nlos * re;
  const double b = nlos * im;
  return a * a + b * b;
}

double channel_gain(double d, double ref_gain, double rician_k, Rng& rng, bool deterministic) {
  if (!(d > 0.0)) throw std::invalid_argument("channel_gain: distance must be > 0");
  const double path = ref_gain / (d * d);
  return deterministic ? path : path * rician_fading(rician_k, rng);
}

double uplink_rate(std::size_t k, std::span<const double> powers, std::span<const double> gains,
                   double bandwidth_hz, double noise_power_w) {
  if (powers.size() != gains.size() || k >= powers.size()) {
    throw std::invalid_argument("uplink_rate: powers and gains must have length K > k");
  }
  double interference = 0.0;
  for (std::size_t l = 0; l < powers.size(); ++l) {
    if (l != k) interference += powers[l] * gains[l];
  }
  return bandwidth_hz * std::log2(1.0 + powers[k] * gains[k] / (interference + noise_power_w));
}

std::pair<double, double> sample_in_disc(double radius, Rng& rng) {
  const double r = radius * std::sqrt(rng.uniform());
  const double theta = 2.0 * std::numbers::pi * rng.uniform();
  return {r * std::cos(theta), r * std::sin(theta)};
}

}  // namespace mecllm::env
