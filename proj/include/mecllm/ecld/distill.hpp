#pragma once

#include <vector>

#include "mecllm/core/tensor.hpp"

namespace mecllm::ecld {

struct DistillConfig {
  double alpha = 0.5;
  double tau = 2.0;

  void validate() const;
};

struct DistillLoss {
  double value = 0.0;  // (1 - alpha) * ce + alpha * kl
  double ce = 0.0;     // batch mean cross-entropy against labels at temperature 1
  double kl = 0.0;     // batch mean KL(p_t(tau) || p_s(tau))
  Matrix grad;         // d value / d student_logits
};

// Row-wise softmax(z / tau), max-shifted.
Matrix softmax(const Matrix& logits, double tau = 1.0);

DistillLoss distill_loss(const Matrix& student_logits, const Matrix& teacher_logits,
                         const Matrix& labels, const DistillConfig& cfg);

// Throws unless every row has exactly one 1 and zeros elsewhere.
void check_one_hot(const Matrix& labels);
Matrix one_hot(const std::vector<int>& classes, std::size_t n_classes);

}  // namespace mecllm::ecld
