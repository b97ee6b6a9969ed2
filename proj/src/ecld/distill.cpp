#include "mecllm/ecld/distill.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace mecllm::ecld {

void DistillConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument("DistillConfig: tau must be > 0");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("DistillConfig: alpha must lie in [0, 1]");
  }
}

Matrix softmax(const Matrix& logits, double tau) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const auto z = logits.row(i).array() / tau;
    const auto e = (z - z.maxCoeff()).exp();
    p.row(i) = e / e.sum();
  }
  return p;
}

void check_one_hot(const Matrix& labels) {
  for (Eigen::Index i = 0; i < labels.rows(); ++i) {
    int ones = 0;
    for (Eigen::Index j = 0; j < labels.cols(); ++j) {
      const double v = labels(i, j);
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        throw std::invalid_argument("labels: entries must be 0 or 1");
      }
    }
    if (ones != 1) throw std::invalid_argument("labels: each row must contain exactly one 1");
  }
}

Matrix one_hot(const std::vector<int>& classes, std::size_t n_classes) {
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(classes.size()),
                          static_cast<Eigen::Index>(n_classes));
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] < 0 || static_cast<std::size_t>(classes[i]) >= n_classes) {
      throw std::invalid_argument("one_hot: class index out of range");
    }
    y(static_cast<Eigen::Index>(i), classes[i]) = 1.0;
  }
  return y;
}

DistillLoss distill_loss(const Matrix& student_logits, const Matrix& teacher_logits,
                         const Matrix& labels, const DistillConfig& cfg) {
  cfg.validate();
  if (student_logits.rows() != teacher_logits.rows() ||
      student_logits.cols() != teacher_logits.cols() ||
      student_logits.rows() != labels.rows() || student_logits.cols() != labels.cols()) {
    throw std::invalid_argument("distill_loss: logits and labels must share a shape");
  }
  if (student_logits.rows() == 0) throw std::invalid_argument("distill_loss: empty batch");
  check_one_hot(labels);

  const double n = static_cast<double>(student_logits.rows());
  const double tau = cfg.tau;
  const Matrix ps = softmax(student_logits);
  const Matrix ps_t = softmax(student_logits, tau);
  const Matrix pt_t = softmax(teacher_logits, tau);

  DistillLoss out;
  for (Eigen::Index i = 0; i < ps.rows(); ++i) {
    // log-softmax computed directly for stability
    const auto zs = student_logits.row(i).array();
    const double lse = zs.maxCoeff() + std::log((zs - zs.maxCoeff()).exp().sum());
    out.ce -= (labels.row(i).array() * (zs - lse)).sum();

    const auto zs_t = zs / tau;
    const auto zt_t = teacher_logits.row(i).array() / tau;
    const double lse_s = zs_t.maxCoeff() + std::log((zs_t - zs_t.maxCoeff()).exp().sum());
    const double lse_t = zt_t.maxCoeff() + std::log((zt_t - zt_t.maxCoeff()).exp().sum());
    for (Eigen::Index j = 0; j < ps.cols(); ++j) {
      const double p = pt_t(i, j);
      if (p > 0.0) out.kl += p * ((zt_t(j) - lse_t) - (zs_t(j) - lse_s));
    }
  }
  out.ce /= n;
  out.kl = std::max(0.0, out.kl / n);
  out.value = (1.0 - cfg.alpha) * out.ce + cfg.alpha * out.kl;
  out.grad = ((1.0 - cfg.alpha) * (ps - labels) + (cfg.alpha / tau) * (ps_t - pt_t)) / n;
  return out;
}

}  // namespace mecllm::ecld
