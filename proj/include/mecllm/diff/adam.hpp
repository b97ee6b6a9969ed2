#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mecllm/core/tensor.hpp"
#include "mecllm/diff/param.hpp"

namespace mecllm::diff {

class Checkpoint;

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive-moment optimizer with bias correction. Holds first/second moment
// buffers aligned with the parameter list it was built from.
class Adam {
 public:
  Adam() = default;
  Adam(ParamList params, AdamConfig config);

  // Applies one update from the grads currently stored in the parameter list.
  void step();
  void zero_grad() { zero_grads(params_); }

  const AdamConfig& config() const { return config_; }
  std::int64_t steps() const { return t_; }
  const ParamList& params() const { return params_; }

  void save(Checkpoint& ckpt, const std::string& prefix) const;
  void load(const Checkpoint& ckpt, const std::string& prefix);

 private:
  ParamList params_;
  AdamConfig config_;
  std::vector<Tensor> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace mecllm::diff
