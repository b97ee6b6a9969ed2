#include "mecllm/diff/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "mecllm/diff/checkpoint.hpp"

namespace mecllm::diff {

Adam::Adam(ParamList params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    if (!p.value->same_shape(*p.grad)) {
      throw std::invalid_argument("Adam: grad shape mismatch for " + p.name);
    }
    m_.emplace_back(p.value->shape());
    v_.emplace_back(p.value->shape());
  }
}

void Adam::step() {
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto value = params_[i].value->data();
    auto grad = params_[i].grad->data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad[j];
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      value[j] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

void Adam::save(Checkpoint& ckpt, const std::string& prefix) const {
  ckpt.put_meta(prefix + ".t", std::to_string(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    ckpt.put_tensor(prefix + ".m." + params_[i].name, m_[i]);
    ckpt.put_tensor(prefix + ".v." + params_[i].name, v_[i]);
  }
}

void Adam::load(const Checkpoint& ckpt, const std::string& prefix) {
  t_ = std::stoll(ckpt.meta(prefix + ".t"));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Tensor& m = ckpt.tensor(prefix + ".m." + params_[i].name);
    const Tensor& v = ckpt.tensor(prefix + ".v." + params_[i].name);
    if (!m.same_shape(m_[i]) || !v.same_shape(v_[i])) {
      throw std::runtime_error("Adam::load: moment shape mismatch for " + params_[i].name);
    }
    m_[i] = m;
    v_[i] = v;
  }
}

}  // namespace mecllm::diff
