#pragma once

// Scalar reference implementations written independently of src/ecld.

#include <cmath>
#include <string>
#include <vector>

namespace mecllm::testing {

inline std::vector<double> oracle_softmax(const std::vector<double>& z, double tau) {
  double mx = z[0];
  for (double v : z) mx = v > mx ? v : mx;
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp((z[i] - mx) / tau);
    s += p[i];
  }
  for (double& v : p) v /= s;
  return p;
}

// (1 - alpha) * CE(y, p_s) + alpha * KL(p_t(tau) || p_s(tau)), batch mean.
inline double oracle_distill(const std::vector<std::vector<double>>& zs,
                             const std::vector<std::vector<double>>& zt,
                             const std::vector<int>& label, double alpha, double tau) {
  double total = 0.0;
  for (std::size_t n = 0; n < zs.size(); ++n) {
    const auto ps = oracle_softmax(zs[n], 1.0);
    const auto ps_t = oracle_softmax(zs[n], tau);
    const auto pt_t = oracle_softmax(zt[n], tau);
    const double ce = -std::log(ps[static_cast<std::size_t>(label[n])]);
    double kl = 0.0;
    for (std::size_t i = 0; i < pt_t.size(); ++i) kl += pt_t[i] * std::log(pt_t[i] / ps_t[i]);
    total += (1.0 - alpha) * ce + alpha * kl;
  }
  return total / static_cast<double>(zs.size());
}

inline double oracle_quantize(double w, int bits, double a, double b) {
  const double delta = (b - a) / (std::pow(2.0, bits) - 1.0);
  const double c = w < a ? a : (w > b ? b : w);
  return std::round((c - a) / delta) * delta + a;
}

inline std::string lower(std::string s) {
  for (char& c : s) c = (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c;
  return s;
}

inline double oracle_accuracy(const std::vector<std::string>& predictions,
                              const std::vector<std::string>& answers) {
  int hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const std::string p = lower(predictions[i]), a = lower(answers[i]);
    bool found = false;
    for (std::size_t s = 0; !found && s + a.size() <= p.size(); ++s) found = p.compare(s, a.size(), a) == 0;
    hits += found ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

inline double oracle_hallucination(const std::vector<std::vector<int>>& articles) {
  double factual = 0.0, total = 0.0;
  for (const auto& a : articles) {
    for (int l : a) {
      factual += l;
      total += 1.0;
    }
  }
  return 1.0 - factual / total;
}

}  // namespace mecllm::testing
