#include "mecllm/ecld/importance.hpp"

#include <cmath>
#include <stdexcept>

#include "mecllm/ecld/masks.hpp"

namespace mecllm::ecld {

namespace {

void check_scores(const std::span<const double> v, std::size_t expected, const char* what) {
  if (v.size() != expected) {
    throw std::invalid_argument(std::string("importance: wrong number of ") + what + " scores");
  }
  for (double s : v) {
    if (!std::isfinite(s) || s < 0.0) {
      throw std::invalid_argument(std::string("importance: invalid ") + what + " score");
    }
  }
}

}  // namespace

void ImportanceScores::validate(const ToyNetSpec& spec) const {
  check_scores(layer, spec.layers, "layer");
  check_scores(neuron.data(), spec.layers * spec.hidden, "neuron");
  check_scores(head.data(), spec.layers * spec.heads, "head");
  check_scores(embed, spec.embed_dim, "embed");
}

double mean_abs_delta(const Matrix& a, const Matrix& b) {
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().mean();
}

ImportanceScores compute_importance(const ToyNet& net, const Matrix& calibration) {
  const ToyNetSpec& spec = net.spec();
  if (calibration.rows() == 0) throw std::invalid_argument("compute_importance: empty calibration batch");
  if (static_cast<std::size_t>(calibration.cols()) != spec.embed_dim) {
    throw std::invalid_argument("compute_importance: calibration width " +
                                std::to_string(calibration.cols()) + " != embed_dim " +
                                std::to_string(spec.embed_dim));
  }
  const Matrix reference = net.forward(calibration);

  auto sensitivity = [&](const ComponentMask& m) {
    ToyNet probe = net;
    apply_masks(probe, expand_components(spec, m));
    return mean_abs_delta(reference, probe.forward(calibration));
  };

  ImportanceScores s;
  s.layer.resize(spec.layers);
  s.neuron = Tensor({spec.layers, spec.hidden});
  s.head = Tensor({spec.layers, spec.heads});
  s.embed.resize(spec.embed_dim);

  for (std::size_t l = 0; l < spec.layers; ++l) {
    auto m = ComponentMask::ones(spec);
    m.layer[l] = 0.0;
    s.layer[l] = sensitivity(m);
    for (std::size_t j = 0; j < spec.hidden; ++j) {
      auto mn = ComponentMask::ones(spec);
      mn.neuron.at(l, j) = 0.0;
      s.neuron.at(l, j) = sensitivity(mn);
    }
    for (std::size_t h = 0; h < spec.heads; ++h) {
      auto mh = ComponentMask::ones(spec);
      mh.head.at(l, h) = 0.0;
      s.head.at(l, h) = sensitivity(mh);
    }
  }
  for (std::size_t e = 0; e < spec.embed_dim; ++e) {
    auto m = ComponentMask::ones(spec);
    m.embed[e] = 0.0;
    s.embed[e] = sensitivity(m);
  }
  return s;
}

}  // namespace mecllm::ecld
