#pragma once

#include <string>
#include <vector>

#include "mecllm/core/tensor.hpp"

namespace mecllm::diff {

// Non-owning handle to a trainable tensor and its gradient accumulator.
struct ParamRef {
  std::string name;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
};

using ParamList = std::vector<ParamRef>;

inline void zero_grads(const ParamList& params) {
  for (const auto& p : params) p.grad->fill(0.0);
}

}  // namespace mecllm::diff
