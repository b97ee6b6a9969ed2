#include "mecllm/diff/linear.hpp"

#include <cmath>
#include <stdexcept>

namespace mecllm::diff {

Linear::Linear(std::size_t in, std::size_t out)
    : in_(in),
      out_(out),
      weight_({out, in}),
      bias_({out}),
      weight_grad_({out, in}),
      bias_grad_({out}) {
  if (in == 0 || out == 0) throw std::invalid_argument("Linear: zero width");
}

void Linear::init(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
  for (auto& w : weight_.data()) w = rng.uniform(-bound, bound);
  for (auto& b : bias_.data()) b = rng.uniform(-bound, bound);
}

Matrix Linear::forward(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != in_) {
    throw std::invalid_argument("Linear::forward: expected " + std::to_string(in_) +
                                " input features, got " + std::to_string(x.cols()));
  }
  Matrix y = x * weight_.matrix().transpose();
  y.rowwise() += bias_.matrix().row(0);
  return y;
}

Matrix Linear::backward(const Matrix& x, const Matrix& dy) {
  if (x.rows() != dy.rows() || static_cast<std::size_t>(dy.cols()) != out_) {
    throw std::invalid_argument("Linear::backward: shape mismatch");
  }
  weight_grad_.matrix().noalias() += dy.transpose() * x;
  bias_grad_.matrix().row(0) += dy.colwise().sum();
  return dy * weight_.matrix();
}

void Linear::collect(ParamList& out, const std::string& prefix) {
  out.push_back({prefix + ".weight", &weight_, &weight_grad_});
  out.push_back({prefix + ".bias", &bias_, &bias_grad_});
}

}  // namespace mecllm::diff
