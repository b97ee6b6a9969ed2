#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "mecllm/core/rng.hpp"
#include "mecllm/core/tensor.hpp"
#include "mecllm/diff/mlp.hpp"
#include "mecllm/diff/param.hpp"

namespace mecllm::diff {

inline constexpr double kLog2Pi = 1.8378770664093453;

double softplus(double x);
double sigmoid(double x);

// log sigmoid'(u) = -softplus(u) - softplus(-u), summed over a row.
double sigmoid_log_det(std::span<const double> raw);

// Diagonal Gaussian log-density of the pre-squash value, summed over dims.
double gaussian_log_prob(std::span<const double> raw, std::span<const double> mean,
                         std::span<const double> log_std);

// Log-density of sigmoid(raw) on the unit cube: Gaussian term minus the
// squash log-Jacobian. One entry per row.
Eigen::VectorXd squashed_log_prob(const Matrix& raw, const Matrix& mean,
                                  std::span<const double> log_std);

struct GaussianSample {
  Matrix raw;     // mean + std * noise
  Matrix noise;   // standard normal draws
  Matrix action;  // sigmoid(raw), in [0, 1]
  Eigen::VectorXd log_prob;
};

// Reparameterized draw from N(mean, exp(log_std)^2) followed by the sigmoid
// squash. log_prob is exact for the squashed action.
GaussianSample gaussian_head(const Matrix& mean, std::span<const double> log_std, Rng& rng);

// Per-sample partials of the squashed log-prob with respect to the mean and
// the log-std, holding the raw sample fixed.
struct LogProbGrad {
  Matrix d_mean;
  Matrix d_log_std;
};
LogProbGrad squashed_log_prob_grad(const Matrix& raw, const Matrix& mean,
                                   std::span<const double> log_std);

// State-conditioned mean with a state-independent learned log-std.
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(const MlpSpec& mean_spec, double init_log_std = -0.5);

  void init(Rng& rng);

  Matrix mean(const Matrix& states, MlpCache* cache = nullptr) const;
  GaussianSample sample(const Matrix& states, Rng& rng) const;
  Matrix mean_action(const Matrix& states) const;

  // Backpropagate dL/dmean through the mean network and add dL/dlog_std.
  void backward(const MlpCache& cache, const Matrix& d_mean,
                std::span<const double> d_log_std);

  std::size_t state_width() const { return net_.input_width(); }
  std::size_t action_width() const { return net_.output_width(); }

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  Tensor& log_std() { return log_std_; }
  const Tensor& log_std() const { return log_std_; }
  Tensor& log_std_grad() { return log_std_grad_; }

  void collect(ParamList& out, const std::string& prefix);

 private:
  Mlp net_;
  Tensor log_std_, log_std_grad_;
  double init_log_std_ = -0.5;
};

}  // namespace mecllm::diff
