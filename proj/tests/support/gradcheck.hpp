#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "mecllm/core/rng.hpp"
#include "mecllm/core/tensor.hpp"
#include "mecllm/diff/param.hpp"

namespace mecllm::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true gradient
// is ~0 from dominating through round-off.
inline double rel_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Central differences of loss() against the grads produced by analytic().
// analytic() must zero and then fill the grads of `params`.
inline GradCheckResult grad_check(const diff::ParamList& params,
                                  const std::function<double()>& loss,
                                  const std::function<void()>& analytic, double h = 1e-5) {
  analytic();
  std::vector<Tensor> grads;
  for (const auto& p : params) grads.push_back(*p.grad);
  GradCheckResult r;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = *params[i].value;
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double orig = w[j];
      w[j] = orig + h;
      const double up = loss();
      w[j] = orig - h;
      const double down = loss();
      w[j] = orig;
      const double numeric = (up - down) / (2.0 * h);
      r.max_rel_error = std::max(r.max_rel_error, rel_error(grads[i][j], numeric));
      ++r.checked;
    }
  }
  return r;
}

// Same check for a plain input matrix.
inline double grad_check_input(Matrix& x, const Matrix& analytic,
                               const std::function<double()>& loss, double h = 1e-5) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = x.data()[i];
    x.data()[i] = orig + h;
    const double up = loss();
    x.data()[i] = orig - h;
    const double down = loss();
    x.data()[i] = orig;
    worst = std::max(worst, rel_error(analytic.data()[i], (up - down) / (2.0 * h)));
  }
  return worst;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

}  // namespace mecllm::testing
