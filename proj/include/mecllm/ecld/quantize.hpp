#pragma once

#include <cstddef>

#include "mecllm/core/tensor.hpp"

namespace mecllm::ecld {

// Affine lattice {a, a + step, ..., b} with 2^bits levels.
struct QuantSpec {
  int bits = 8;
  double a = 0.0;
  double b = 1.0;

  double levels() const;  // 2^bits
  double step() const { return (b - a) / (levels() - 1.0); }
  // Throws unless 1 <= bits <= 32 and b > a (both finite).
  void validate() const;
};

// Clamp to [a, b], then snap to the nearest lattice level. The top level maps
// to b exactly so that q = 1 outputs are exactly {a, b}.
double quantize_value(double w, const QuantSpec& spec);
Tensor quantize(const Tensor& w, const QuantSpec& spec);

// Sum of squared reconstruction errors ||W - Q(W)||^2.
double quant_error(const Tensor& w, const QuantSpec& spec);

struct QuantFit {
  QuantSpec spec;
  double error = 0.0;        // error of the returned spec
  double naive_error = 0.0;  // error of a = min(W), b = max(W)
  bool degenerate = false;   // W constant; spec is a placeholder
};

// Grid search over a < b on [min W, max W] (grid x grid points), followed by
// one refinement grid of the same resolution around the best coarse pair.
// A candidate replaces the incumbent only on strict improvement, starting from
// the min/max pair, so error <= naive_error always holds.
QuantFit fit_quant_range(const Tensor& w, int bits, std::size_t grid = 32, bool refine = true);

}  // namespace mecllm::ecld
