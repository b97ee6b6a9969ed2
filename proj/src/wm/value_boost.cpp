#include "mecllm/wm/value_boost.hpp"

#include <stdexcept>

namespace mecllm::wm {

std::vector<double> boosted_targets(std::span<const double> rewards, std::span<const double> dones,
                                    std::span<const double> next_values,
                                    std::span<const double> model_rewards,
                                    std::span<const double> model_next_values, double gamma,
                                    double lambda_wm) {
  const std::size_t n = rewards.size();
  if (dones.size() != n || next_values.size() != n || model_rewards.size() != n ||
      model_next_values.size() != n) {
    throw std::invalid_argument("boosted_targets: length mismatch");
  }
  if (!(lambda_wm >= 0.0 && lambda_wm <= 1.0)) {
    throw std::invalid_argument("boosted_targets: lambda_wm must be in [0, 1]");
  }
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double live = 1.0 - dones[i];
    const double real = rewards[i] + gamma * live * next_values[i];
    const double model = model_rewards[i] + gamma * live * model_next_values[i];
    y[i] = (1.0 - lambda_wm) * real + lambda_wm * model;
  }
  return y;
}

}  // namespace mecllm::wm
