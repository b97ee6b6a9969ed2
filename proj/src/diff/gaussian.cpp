#include "mecllm/diff/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace mecllm::diff {

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double sigmoid_log_det(std::span<const double> raw) {
  double s = 0.0;
  for (double u : raw) s -= softplus(u) + softplus(-u);
  return s;
}

double gaussian_log_prob(std::span<const double> raw, std::span<const double> mean,
                         std::span<const double> log_std) {
  if (raw.size() != mean.size() || raw.size() != log_std.size()) {
    throw std::invalid_argument("gaussian_log_prob: dimension mismatch");
  }
  double lp = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double e = (raw[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * e * e - log_std[i] - 0.5 * kLog2Pi;
  }
  return lp;
}

Eigen::VectorXd squashed_log_prob(const Matrix& raw, const Matrix& mean,
                                  std::span<const double> log_std) {
  if (raw.rows() != mean.rows() || raw.cols() != mean.cols() ||
      static_cast<std::size_t>(raw.cols()) != log_std.size()) {
    throw std::invalid_argument("squashed_log_prob: shape mismatch");
  }
  const auto d = static_cast<std::size_t>(raw.cols());
  Eigen::VectorXd out(raw.rows());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    std::span<const double> u(raw.row(i).data(), d);
    std::span<const double> mu(mean.row(i).data(), d);
    out(i) = gaussian_log_prob(u, mu, log_std) - sigmoid_log_det(u);
  }
  return out;
}

GaussianSample gaussian_head(const Matrix& mean, std::span<const double> log_std, Rng& rng) {
  if (static_cast<std::size_t>(mean.cols()) != log_std.size()) {
    throw std::invalid_argument("gaussian_head: log_std width mismatch");
  }
  GaussianSample s;
  s.noise.resize(mean.rows(), mean.cols());
  s.raw.resize(mean.rows(), mean.cols());
  s.action.resize(mean.rows(), mean.cols());
  for (Eigen::Index i = 0; i < mean.rows(); ++i) {
    for (Eigen::Index j = 0; j < mean.cols(); ++j) {
      const double eps = rng.normal();
      s.noise(i, j) = eps;
      s.raw(i, j) = mean(i, j) + std::exp(log_std[j]) * eps;
      s.action(i, j) = sigmoid(s.raw(i, j));
    }
  }
  s.log_prob = squashed_log_prob(s.raw, mean, log_std);
  return s;
}

LogProbGrad squashed_log_prob_grad(const Matrix& raw, const Matrix& mean,
                                   std::span<const double> log_std) {
  LogProbGrad g;
  g.d_mean.resize(raw.rows(), raw.cols());
  g.d_log_std.resize(raw.rows(), raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const double inv_std = std::exp(-log_std[j]);
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      const double e = (raw(i, j) - mean(i, j)) * inv_std;
      g.d_mean(i, j) = e * inv_std;
      g.d_log_std(i, j) = e * e - 1.0;
    }
  }
  return g;
}

GaussianPolicy::GaussianPolicy(const MlpSpec& mean_spec, double init_log_std)
    : net_(mean_spec),
      log_std_({mean_spec.widths.back()}, init_log_std),
      log_std_grad_({mean_spec.widths.back()}),
      init_log_std_(init_log_std) {}

void GaussianPolicy::init(Rng& rng) {
  net_.init(rng);
  log_std_.fill(init_log_std_);
}

Matrix GaussianPolicy::mean(const Matrix& states, MlpCache* cache) const {
  return net_.forward(states, cache);
}

GaussianSample GaussianPolicy::sample(const Matrix& states, Rng& rng) const {
  return gaussian_head(mean(states), log_std_.data(), rng);
}

Matrix GaussianPolicy::mean_action(const Matrix& states) const {
  Matrix m = mean(states);
  return m.unaryExpr([](double v) { return sigmoid(v); });
}

void GaussianPolicy::backward(const MlpCache& cache, const Matrix& d_mean,
                              std::span<const double> d_log_std) {
  net_.backward(cache, d_mean);
  if (d_log_std.size() != log_std_grad_.size()) {
    throw std::invalid_argument("GaussianPolicy::backward: log_std grad width mismatch");
  }
  for (std::size_t j = 0; j < d_log_std.size(); ++j) log_std_grad_[j] += d_log_std[j];
}

void GaussianPolicy::collect(ParamList& out, const std::string& prefix) {
  net_.collect(out, prefix + ".mean");
  out.push_back({prefix + ".log_std", &log_std_, &log_std_grad_});
}

}  // namespace mecllm::diff
