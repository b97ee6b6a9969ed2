#include "mecllm/diff/gru.hpp"

#include <cmath>
#include <stdexcept>

namespace mecllm::diff {

namespace {

Matrix sigmoid(const Matrix& a) {
  return (1.0 / (1.0 + (-a.array()).exp())).matrix();
}

}  // namespace

GruCell::GruCell(const RecurrentSpec& spec)
    : spec_(spec),
      w_({3 * spec.hidden_width, spec.input_width}),
      u_({3 * spec.hidden_width, spec.hidden_width}),
      b_({3 * spec.hidden_width}),
      w_grad_({3 * spec.hidden_width, spec.input_width}),
      u_grad_({3 * spec.hidden_width, spec.hidden_width}),
      b_grad_({3 * spec.hidden_width}) {
  if (spec.input_width == 0 || spec.hidden_width == 0) {
    throw std::invalid_argument("RecurrentSpec: widths must be >= 1");
  }
}

void GruCell::init(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(spec_.hidden_width));
  for (auto& v : w_.data()) v = rng.uniform(-bound, bound);
  for (auto& v : u_.data()) v = rng.uniform(-bound, bound);
  for (auto& v : b_.data()) v = rng.uniform(-bound, bound);
}

Matrix GruCell::forward(const Matrix& x, const Matrix& h, GruStepCache* cache) const {
  const auto H = static_cast<Eigen::Index>(spec_.hidden_width);
  if (static_cast<std::size_t>(x.cols()) != spec_.input_width || h.cols() != H ||
      x.rows() != h.rows()) {
    throw std::invalid_argument("GruCell::forward: shape mismatch");
  }
  const auto W = w_.matrix();
  const auto U = u_.matrix();
  Matrix gx = x * W.transpose();
  gx.rowwise() += b_.matrix().row(0);

  Matrix z = sigmoid(gx.middleCols(0, H) + h * U.middleRows(0, H).transpose());
  Matrix r = sigmoid(gx.middleCols(H, H) + h * U.middleRows(H, H).transpose());
  Matrix rh = r.cwiseProduct(h);
  Matrix n = (gx.middleCols(2 * H, H) + rh * U.middleRows(2 * H, H).transpose())
                 .array()
                 .tanh()
                 .matrix();
  Matrix h_next = (1.0 - z.array()).matrix().cwiseProduct(h) + z.cwiseProduct(n);
  if (cache) {
    cache->x = x;
    cache->h_prev = h;
    cache->z = std::move(z);
    cache->r = std::move(r);
    cache->n = std::move(n);
    cache->rh = std::move(rh);
  }
  return h_next;
}

std::pair<Matrix, Matrix> GruCell::backward(const GruStepCache& c, const Matrix& dh_next) {
  if (c.empty()) throw std::logic_error("GruCell::backward: no cached forward pass");
  const auto H = static_cast<Eigen::Index>(spec_.hidden_width);
  const auto W = w_.matrix();
  const auto U = u_.matrix();
  auto Ug = u_grad_.matrix();

  Matrix dz = dh_next.cwiseProduct(c.n - c.h_prev);
  Matrix dn = dh_next.cwiseProduct(c.z);
  Matrix dh = dh_next.cwiseProduct((1.0 - c.z.array()).matrix());

  Matrix dan = dn.array() * (1.0 - c.n.array().square());
  Matrix drh = dan * U.middleRows(2 * H, H);
  Ug.middleRows(2 * H, H).noalias() += dan.transpose() * c.rh;
  Matrix dr = drh.cwiseProduct(c.h_prev);
  dh += drh.cwiseProduct(c.r);

  Matrix daz = dz.array() * c.z.array() * (1.0 - c.z.array());
  Matrix dar = dr.array() * c.r.array() * (1.0 - c.r.array());
  Ug.middleRows(0, H).noalias() += daz.transpose() * c.h_prev;
  Ug.middleRows(H, H).noalias() += dar.transpose() * c.h_prev;
  dh.noalias() += daz * U.middleRows(0, H);
  dh.noalias() += dar * U.middleRows(H, H);

  Matrix dgx(dh_next.rows(), 3 * H);
  dgx << daz, dar, dan;
  w_grad_.matrix().noalias() += dgx.transpose() * c.x;
  b_grad_.matrix().row(0) += dgx.colwise().sum();
  Matrix dx = dgx * W;
  return {std::move(dx), std::move(dh)};
}

void GruCell::collect(ParamList& out, const std::string& prefix) {
  out.push_back({prefix + ".w", &w_, &w_grad_});
  out.push_back({prefix + ".u", &u_, &u_grad_});
  out.push_back({prefix + ".b", &b_, &b_grad_});
}

}  // namespace mecllm::diff
