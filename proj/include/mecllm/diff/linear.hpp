#pragma once

#include <cstddef>
#include <string>

#include "mecllm/core/rng.hpp"
#include "mecllm/core/tensor.hpp"
#include "mecllm/diff/param.hpp"

namespace mecllm::diff {

// y = x W^T + b for a batch x of shape (n, in). W is (out, in).
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out);

  // Fan-in scaled uniform init: U(-1/sqrt(in), 1/sqrt(in)) for W and b.
  void init(Rng& rng);

  Matrix forward(const Matrix& x) const;
  // Accumulates dW, db and returns dL/dx.
  Matrix backward(const Matrix& x, const Matrix& dy);

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }

  Tensor& weight() { return weight_; }
  const Tensor& weight() const { return weight_; }
  Tensor& bias() { return bias_; }
  const Tensor& bias() const { return bias_; }
  Tensor& weight_grad() { return weight_grad_; }
  Tensor& bias_grad() { return bias_grad_; }

  void collect(ParamList& out, const std::string& prefix);

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  Tensor weight_, bias_;
  Tensor weight_grad_, bias_grad_;
};

}  // namespace mecllm::diff
