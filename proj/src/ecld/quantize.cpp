#include "mecllm/ecld/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mecllm::ecld {

double QuantSpec::levels() const { return std::ldexp(1.0, bits); }

void QuantSpec::validate() const {
  if (bits < 1 || bits > 32) {
    throw std::invalid_argument("QuantSpec: bits must be in [1, 32], got " + std::to_string(bits));
  }
  if (!std::isfinite(a) || !std::isfinite(b) || !(b > a)) {
    throw std::invalid_argument("QuantSpec: need finite a < b");
  }
}

double quantize_value(double w, const QuantSpec& spec) {
  const double top = spec.levels() - 1.0;
  const double delta = spec.step();
  const double clamped = std::clamp(w, spec.a, spec.b);
  const double k = std::clamp(std::round((clamped - spec.a) / delta), 0.0, top);
  if (k == top) return spec.b;
  return spec.a + k * delta;
}

Tensor quantize(const Tensor& w, const QuantSpec& spec) {
  spec.validate();
  Tensor out = w;
  for (auto& v : out.data()) v = quantize_value(v, spec);
  return out;
}

double quant_error(const Tensor& w, const QuantSpec& spec) {
  spec.validate();
  double err = 0.0;
  for (double v : w.data()) {
    const double d = v - quantize_value(v, spec);
    err += d * d;
  }
  return err;
}

QuantFit fit_quant_range(const Tensor& w, int bits, std::size_t grid, bool refine) {
  if (w.empty()) throw std::invalid_argument("fit_quant_range: empty tensor");
  if (grid < 2) throw std::invalid_argument("fit_quant_range: grid needs >= 2 points per axis");
  const auto [mn_it, mx_it] = std::minmax_element(w.data().begin(), w.data().end());
  const double lo = *mn_it, hi = *mx_it;

  QuantFit fit;
  if (!(hi > lo)) {
    const double eps = 1e-9 * std::max(1.0, std::abs(lo));
    fit.spec = {bits, lo, lo + eps};
    fit.spec.validate();
    fit.error = quant_error(w, fit.spec);
    fit.naive_error = fit.error;
    fit.degenerate = true;
    return fit;
  }

  fit.spec = {bits, lo, hi};
  fit.spec.validate();
  fit.naive_error = quant_error(w, fit.spec);
  fit.error = fit.naive_error;

  auto search = [&](double a_lo, double a_hi, double b_lo, double b_hi) {
    const double n = static_cast<double>(grid - 1);
    for (std::size_t i = 0; i < grid; ++i) {
      const double a = a_lo + (a_hi - a_lo) * static_cast<double>(i) / n;
      for (std::size_t j = 0; j < grid; ++j) {
        const double b = b_lo + (b_hi - b_lo) * static_cast<double>(j) / n;
        if (!(b > a)) continue;
        const QuantSpec cand{bits, a, b};
        const double e = quant_error(w, cand);
        if (e < fit.error) {
          fit.error = e;
          fit.spec = cand;
        }
      }
    }
  };

  search(lo, hi, lo, hi);
  if (refine) {
    const double cell = (hi - lo) / static_cast<double>(grid - 1);
    const QuantSpec best = fit.spec;
    search(std::max(lo, best.a - cell), std::min(hi, best.a + cell),
           std::max(lo, best.b - cell), std::min(hi, best.b + cell));
  }
  return fit;
}

}  // namespace mecllm::ecld
