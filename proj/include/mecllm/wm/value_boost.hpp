#pragma once

#include <span>
#include <vector>

namespace mecllm::wm {

// y_t = (1 - lambda_wm) [r_t + gamma (1 - d_t) V(s_{t+1})]
//     + lambda_wm [r_hat_t + gamma (1 - d_t) V(s_hat_{t+1})].
// With lambda_wm = 0 the result is bit-identical to the one-step TD target.
std::vector<double> boosted_targets(std::span<const double> rewards, std::span<const double> dones,
                                    std::span<const double> next_values,
                                    std::span<const double> model_rewards,
                                    std::span<const double> model_next_values, double gamma,
                                    double lambda_wm);

}  // namespace mecllm::wm
