#include "mecllm/ecld/toy_net.hpp"

#include <stdexcept>

namespace mecllm::ecld {

void ToyNetSpec::validate() const {
  if (embed_dim == 0 || hidden == 0 || heads == 0 || layers == 0 || classes < 2) {
    throw std::invalid_argument("ToyNetSpec: all dimensions must be positive (classes >= 2)");
  }
  if (hidden % heads != 0) {
    throw std::invalid_argument("ToyNetSpec: hidden width must be divisible by heads");
  }
}

ToyNet::ToyNet(const ToyNetSpec& spec) : spec_(spec) {
  spec.validate();
  for (std::size_t l = 0; l < spec.layers; ++l) {
    up_.emplace_back(spec.embed_dim, spec.hidden);
    down_.emplace_back(spec.hidden, spec.embed_dim);
  }
  out_ = diff::Linear(spec.embed_dim, spec.classes);
}

void ToyNet::init(Rng& rng) {
  for (std::size_t l = 0; l < spec_.layers; ++l) {
    up_[l].init(rng);
    down_[l].init(rng);
  }
  out_.init(rng);
}

Matrix ToyNet::forward(const Matrix& x, ToyNetCache* cache) const {
  if (static_cast<std::size_t>(x.cols()) != spec_.embed_dim) {
    throw std::invalid_argument("ToyNet::forward: expected " +
                                std::to_string(spec_.embed_dim) + " input features, got " +
                                std::to_string(x.cols()));
  }
  if (cache) {
    cache->stream.clear();
    cache->act.clear();
    cache->stream.push_back(x);
  }
  Matrix s = x;
  for (std::size_t l = 0; l < spec_.layers; ++l) {
    Matrix a = up_[l].forward(s).array().tanh().matrix();
    s += down_[l].forward(a);
    if (cache) {
      cache->act.push_back(std::move(a));
      cache->stream.push_back(s);
    }
  }
  return out_.forward(s);
}

void ToyNet::backward(const ToyNetCache& cache, const Matrix& d_logits) {
  if (cache.empty()) throw std::logic_error("ToyNet::backward: no cached forward pass");
  Matrix ds = out_.backward(cache.stream.back(), d_logits);
  for (std::size_t l = spec_.layers; l-- > 0;) {
    const Matrix& a = cache.act[l];
    Matrix da = down_[l].backward(a, ds);
    Matrix dpre = da.array() * (1.0 - a.array().square());
    ds += up_[l].backward(cache.stream[l], dpre);
  }
}

diff::ParamList ToyNet::params() {
  diff::ParamList p;
  for (std::size_t l = 0; l < spec_.layers; ++l) {
    up_[l].collect(p, "layer" + std::to_string(l) + ".up");
    down_[l].collect(p, "layer" + std::to_string(l) + ".down");
  }
  out_.collect(p, "out");
  return p;
}

std::vector<const Tensor*> ToyNet::tensors() const {
  std::vector<const Tensor*> t;
  for (std::size_t l = 0; l < spec_.layers; ++l) {
    t.push_back(&up_[l].weight());
    t.push_back(&up_[l].bias());
    t.push_back(&down_[l].weight());
    t.push_back(&down_[l].bias());
  }
  t.push_back(&out_.weight());
  t.push_back(&out_.bias());
  return t;
}

std::optional<std::size_t> ToyNet::layer_of(std::size_t tensor_index) const {
  if (tensor_index < 4 * spec_.layers) return tensor_index / 4;
  return std::nullopt;
}

std::size_t ToyNet::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* t : tensors()) n += t->size();
  return n;
}

}  // namespace mecllm::ecld
