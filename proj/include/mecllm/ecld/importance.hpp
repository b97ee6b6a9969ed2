#pragma once

#include <vector>

#include "mecllm/core/tensor.hpp"
#include "mecllm/ecld/toy_net.hpp"

namespace mecllm::ecld {

struct ImportanceScores {
  std::vector<double> layer;  // (layers)
  Tensor neuron;              // (layers, hidden)
  Tensor head;                // (layers, heads)
  std::vector<double> embed;  // (embed_dim)

  // Throws unless dimensions match spec and every score is finite and >= 0.
  void validate(const ToyNetSpec& spec) const;
};

// Leave-one-out sensitivity: the score of a component is the mean absolute
// change of the logits over the calibration batch when every weight touching
// that component is zeroed.
ImportanceScores compute_importance(const ToyNet& net, const Matrix& calibration);

// Mean |a - b| over all entries.
double mean_abs_delta(const Matrix& a, const Matrix& b);

}  // namespace mecllm::ecld
