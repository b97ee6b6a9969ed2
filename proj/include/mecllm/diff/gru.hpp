#pragma once

#include <cstddef>
#include <string>
#include <utility>

#include "mecllm/core/rng.hpp"
#include "mecllm/core/tensor.hpp"
#include "mecllm/diff/param.hpp"

namespace mecllm::diff {

struct RecurrentSpec {
  std::size_t input_width = 1;
  std::size_t hidden_width = 256;
};

struct GruStepCache {
  Matrix x, h_prev, z, r, n, rh;
  bool empty() const { return x.size() == 0; }
};

// Gated recurrent unit:
//   z = sig(Wz x + Uz h + bz), r = sig(Wr x + Ur h + br)
//   n = tanh(Wn x + Un (r*h) + bn), h' = (1-z)*h + z*n
// W is (3H, in), U is (3H, H), b is (3H), gate blocks ordered [z, r, n].
class GruCell {
 public:
  GruCell() = default;
  explicit GruCell(const RecurrentSpec& spec);

  void init(Rng& rng);

  Matrix forward(const Matrix& x, const Matrix& h, GruStepCache* cache = nullptr) const;
  // Accumulates parameter grads; returns (dL/dx, dL/dh_prev).
  std::pair<Matrix, Matrix> backward(const GruStepCache& cache, const Matrix& dh_next);

  std::size_t input_width() const { return spec_.input_width; }
  std::size_t hidden_width() const { return spec_.hidden_width; }

  Tensor& w() { return w_; }
  Tensor& u() { return u_; }
  Tensor& b() { return b_; }

  void collect(ParamList& out, const std::string& prefix);

 private:
  RecurrentSpec spec_;
  Tensor w_, u_, b_;
  Tensor w_grad_, u_grad_, b_grad_;
};

}  // namespace mecllm::diff
