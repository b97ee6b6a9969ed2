#pragma once

// Scalar reference formulas for the system model, written independently of
// src/env. Each takes plain numbers and returns plain numbers.

#include <algorithm>
#include <cmath>
#include <vector>

namespace mecllm::testing {

inline double oracle_rate(std::size_t k, const std::vector<double>& p, const std::vector<double>& h,
                          double bandwidth, double noise) {
  double interference = noise;
  for (std::size_t l = 0; l < p.size(); ++l) interference += l == k ? 0.0 : p[l] * h[l];
  const double sinr = p[k] * h[k] / interference;
  return bandwidth * std::log(1.0 + sinr) / std::log(2.0);
}

inline double oracle_local_latency(double alpha, double x, double f, double phi) {
  return phi * x * (1.0 - alpha) / f;
}

inline double oracle_local_energy(double alpha, double x, double f, double phi, double kappa) {
  return kappa * f * f * phi * x * (1.0 - alpha);
}

inline double oracle_l_off(double alpha, double x, double rate) { return x * alpha / rate; }
inline double oracle_l_mec(double alpha, double x, double phi, double big_f) {
  return phi * x * alpha / big_f;
}
inline double oracle_e_off(double alpha, double x, double rate, double p) {
  return p * (x * alpha / rate);
}

inline double oracle_blend(double alpha, double local, double mec) {
  return local + alpha * (mec - local);
}

inline double oracle_penalty(const std::vector<double>& a, const std::vector<double>& h,
                             const std::vector<double>& e, const std::vector<double>& emax,
                             double a_min, double h_max) {
  double sa = 0.0, sh = 0.0, se = 0.0, sb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sa += a[k];
    sh += h[k];
    se += e[k];
    sb += emax[k];
  }
  const double k = static_cast<double>(a.size());
  double omega = 0.0;
  if (k * a_min > sa) omega += k * a_min - sa;
  if (sh > k * h_max) omega += sh - k * h_max;
  if (se > sb) omega += se - sb;
  return omega;
}

inline double relative(double got, double want) {
  if (want == 0.0) return std::abs(got);
  return std::abs(got - want) / std::abs(want);
}

}  // namespace mecllm::testing
