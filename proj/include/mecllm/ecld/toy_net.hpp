#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mecllm/core/rng.hpp"
#include "mecllm/core/tensor.hpp"
#include "mecllm/diff/linear.hpp"
#include "mecllm/diff/param.hpp"

namespace mecllm::ecld {

// Small residual classifier standing in for a transformer stack:
//   x_0 = input (embed_dim wide residual stream)
//   x_l = x_{l-1} + down_l(tanh(up_l(x_{l-1})))      l = 1..layers
//   logits = out(x_L)
// The hidden units of each block are split into `heads` equal groups, so the
// net has prunable layers, heads, neurons and embedding dimensions.
struct ToyNetSpec {
  std::size_t embed_dim = 16;
  std::size_t hidden = 32;
  std::size_t heads = 4;
  std::size_t layers = 2;
  std::size_t classes = 4;

  std::size_t head_width() const { return hidden / heads; }
  void validate() const;
};

struct ToyNetCache {
  std::vector<Matrix> stream;  // x_0 .. x_L
  std::vector<Matrix> act;     // tanh activations per block
  bool empty() const { return stream.empty(); }
};

class ToyNet {
 public:
  ToyNet() = default;
  explicit ToyNet(const ToyNetSpec& spec);

  void init(Rng& rng);

  Matrix forward(const Matrix& x, ToyNetCache* cache = nullptr) const;
  void backward(const ToyNetCache& cache, const Matrix& d_logits);

  const ToyNetSpec& spec() const { return spec_; }

  // Parameter tensors in a fixed order: for each layer l
  // [up.weight, up.bias, down.weight, down.bias], then [out.weight, out.bias].
  diff::ParamList params();
  std::vector<const Tensor*> tensors() const;
  std::size_t tensor_count() const { return 4 * spec_.layers + 2; }
  // Block index a parameter tensor belongs to; nullopt for the output head.
  std::optional<std::size_t> layer_of(std::size_t tensor_index) const;
  std::size_t parameter_count() const;

  diff::Linear& up(std::size_t l) { return up_[l]; }
  diff::Linear& down(std::size_t l) { return down_[l]; }
  diff::Linear& out() { return out_; }
  const diff::Linear& up(std::size_t l) const { return up_[l]; }
  const diff::Linear& down(std::size_t l) const { return down_[l]; }
  const diff::Linear& out() const { return out_; }

 private:
  ToyNetSpec spec_;
  std::vector<diff::Linear> up_, down_;
  diff::Linear out_;
};

}  // namespace mecllm::ecld
