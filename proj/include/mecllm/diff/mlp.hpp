#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mecllm/core/rng.hpp"
#include "mecllm/core/tensor.hpp"
#include "mecllm/diff/linear.hpp"
#include "mecllm/diff/param.hpp"

namespace mecllm::diff {

struct MlpSpec {
  // input, hidden..., output. At least one hidden layer.
  std::vector<std::size_t> widths;

  static MlpSpec standard(std::size_t in, std::size_t out, std::size_t hidden = 256,
                          std::size_t depth = 2);
};

// Intermediate values of one forward pass, needed by backward().
struct MlpCache {
  std::vector<Matrix> inputs;  // input to each linear layer
  bool empty() const { return inputs.empty(); }
};

// Feed-forward net with tanh hidden activations and a linear output layer.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(const MlpSpec& spec);

  void init(Rng& rng);

  Matrix forward(const Matrix& x, MlpCache* cache = nullptr) const;
  // Requires a cache filled by forward(); accumulates parameter grads and
  // returns dL/dx.
  Matrix backward(const MlpCache& cache, const Matrix& dy);

  std::size_t input_width() const { return spec_.widths.front(); }
  std::size_t output_width() const { return spec_.widths.back(); }
  const MlpSpec& spec() const { return spec_; }

  std::vector<Linear>& layers() { return layers_; }
  const std::vector<Linear>& layers() const { return layers_; }

  void collect(ParamList& out, const std::string& prefix);

 private:
  MlpSpec spec_;
  std::vector<Linear> layers_;
};

}  // namespace mecllm::diff
