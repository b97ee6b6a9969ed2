#include "mecllm/diff/mlp.hpp"

#include <stdexcept>

namespace mecllm::diff {

MlpSpec MlpSpec::standard(std::size_t in, std::size_t out, std::size_t hidden,
                          std::size_t depth) {
  MlpSpec spec;
  spec.widths.push_back(in);
  for (std::size_t i = 0; i < depth; ++i) spec.widths.push_back(hidden);
  spec.widths.push_back(out);
  return spec;
}

Mlp::Mlp(const MlpSpec& spec) : spec_(spec) {
  if (spec.widths.size() < 3) {
    throw std::invalid_argument("MlpSpec: at least one hidden layer required");
  }
  for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
    layers_.emplace_back(spec.widths[i], spec.widths[i + 1]);
  }
}

void Mlp::init(Rng& rng) {
  for (auto& layer : layers_) layer.init(rng);
}

Matrix Mlp::forward(const Matrix& x, MlpCache* cache) const {
  if (cache) cache->inputs.clear();
  Matrix a = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Matrix y = layers_[i].forward(a);
    if (cache) cache->inputs.push_back(std::move(a));
    if (i + 1 < layers_.size()) {
      a = y.array().tanh().matrix();
    } else {
      return y;
    }
  }
  return a;
}

Matrix Mlp::backward(const MlpCache& cache, const Matrix& dy) {
  if (cache.inputs.size() != layers_.size()) {
    throw std::logic_error("Mlp::backward: no cached forward pass");
  }
  Matrix d = dy;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    Matrix dx = layers_[i].backward(cache.inputs[i], d);
    if (i > 0) {
      const Matrix& act = cache.inputs[i];  // tanh output of layer i-1
      d = dx.array() * (1.0 - act.array().square());
    } else {
      d = std::move(dx);
    }
  }
  return d;
}

void Mlp::collect(ParamList& out, const std::string& prefix) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].collect(out, prefix + ".l" + std::to_string(i));
  }
}

}  // namespace mecllm::diff
