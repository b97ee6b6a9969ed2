#include "mecllm/ecld/masks.hpp"

#include <cmath>
#include <stdexcept>

#include "mecllm/ecld/importance.hpp"

namespace mecllm::ecld {

namespace {

std::size_t popcount(const std::vector<Tensor>& masks) {
  std::size_t n = 0;
  for (const auto& m : masks) n += m.count_nonzero();
  return n;
}

void check_components(const ToyNetSpec& spec, const ComponentMask& m) {
  if (m.neuron.size() != spec.layers * spec.hidden || m.head.size() != spec.layers * spec.heads ||
      m.embed.size() != spec.embed_dim || m.layer.size() != spec.layers) {
    throw std::invalid_argument("component mask does not match network dimensions");
  }
}

}  // namespace

ComponentMask ComponentMask::ones(const ToyNetSpec& spec) {
  return {Tensor({spec.layers}, 1.0), Tensor({spec.layers, spec.hidden}, 1.0),
          Tensor({spec.layers, spec.heads}, 1.0), Tensor({spec.embed_dim}, 1.0)};
}

std::size_t PruningMask::width_popcount() const { return popcount(width); }
std::size_t PruningMask::combined_popcount() const { return popcount(combined); }

std::size_t PruningMask::depth_broadcast_popcount() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < width.size(); ++i) {
    const bool in_layer = i < 4 * depth.size();
    const bool kept = !in_layer || depth[i / 4] != 0.0;
    if (kept) n += width[i].size();
  }
  return n;
}

Tensor threshold_mask(std::span<const double> scores, double theta) {
  if (std::isnan(theta)) throw std::invalid_argument("threshold_mask: theta is NaN");
  Tensor m({scores.size()});
  for (std::size_t i = 0; i < scores.size(); ++i) m[i] = scores[i] >= theta ? 1.0 : 0.0;
  return m;
}

std::vector<Tensor> expand_width(const ToyNetSpec& spec, const ComponentMask& m) {
  check_components(spec, m);
  const std::size_t E = spec.embed_dim, H = spec.hidden, hw = spec.head_width();
  std::vector<Tensor> out;
  for (std::size_t l = 0; l < spec.layers; ++l) {
    std::vector<double> keep(H);
    for (std::size_t j = 0; j < H; ++j) {
      keep[j] = m.neuron.at(l, j) * m.head.at(l, j / hw);
    }
    Tensor up_w({H, E}), up_b({H}), down_w({E, H}), down_b({E});
    for (std::size_t j = 0; j < H; ++j) {
      up_b[j] = keep[j];
      for (std::size_t e = 0; e < E; ++e) {
        up_w.at(j, e) = keep[j] * m.embed[e];
        down_w.at(e, j) = m.embed[e] * keep[j];
      }
    }
    for (std::size_t e = 0; e < E; ++e) down_b[e] = m.embed[e];
    out.push_back(std::move(up_w));
    out.push_back(std::move(up_b));
    out.push_back(std::move(down_w));
    out.push_back(std::move(down_b));
  }
  Tensor out_w({spec.classes, E});
  for (std::size_t c = 0; c < spec.classes; ++c) {
    for (std::size_t e = 0; e < E; ++e) out_w.at(c, e) = m.embed[e];
  }
  out.push_back(std::move(out_w));
  out.emplace_back(std::vector<std::size_t>{spec.classes}, 1.0);
  return out;
}

std::vector<Tensor> expand_depth(const ToyNetSpec& spec, const Tensor& depth) {
  if (depth.size() != spec.layers) {
    throw std::invalid_argument("depth mask does not match layer count");
  }
  const std::size_t E = spec.embed_dim, H = spec.hidden;
  std::vector<Tensor> out;
  for (std::size_t l = 0; l < spec.layers; ++l) {
    out.emplace_back(std::vector<std::size_t>{H, E}, depth[l]);
    out.emplace_back(std::vector<std::size_t>{H}, depth[l]);
    out.emplace_back(std::vector<std::size_t>{E, H}, depth[l]);
    out.emplace_back(std::vector<std::size_t>{E}, depth[l]);
  }
  out.emplace_back(std::vector<std::size_t>{spec.classes, E}, 1.0);
  out.emplace_back(std::vector<std::size_t>{spec.classes}, 1.0);
  return out;
}

std::vector<Tensor> expand_components(const ToyNetSpec& spec, const ComponentMask& m) {
  auto width = expand_width(spec, m);
  const auto depth = expand_depth(spec, m.layer);
  for (std::size_t i = 0; i < width.size(); ++i) width[i] = apply_mask(width[i], depth[i]);
  return width;
}

PruningMask build_masks(const ToyNetSpec& spec, const ImportanceScores& scores,
                        double theta_width, double theta_depth) {
  scores.validate(spec);
  PruningMask pm;
  pm.components.layer = threshold_mask(scores.layer, theta_depth);
  pm.components.neuron = threshold_mask(scores.neuron.data(), theta_width);
  pm.components.neuron = Tensor({spec.layers, spec.hidden}, pm.components.neuron.values());
  pm.components.head = threshold_mask(scores.head.data(), theta_width);
  pm.components.head = Tensor({spec.layers, spec.heads}, pm.components.head.values());
  pm.components.embed = threshold_mask(scores.embed, theta_width);

  pm.width = expand_width(spec, pm.components);
  pm.depth = pm.components.layer;
  const auto depth_bc = expand_depth(spec, pm.depth);
  for (std::size_t i = 0; i < pm.width.size(); ++i) {
    pm.combined.push_back(apply_mask(pm.width[i], depth_bc[i]));
  }
  return pm;
}

PruningMask build_masks(const ToyNetSpec& spec, const ImportanceScores& scores, double theta) {
  return build_masks(spec, scores, theta, theta);
}

Tensor apply_mask(const Tensor& w, const Tensor& m) {
  if (!w.same_shape(m)) {
    throw std::invalid_argument("apply_mask: shape mismatch " + w.shape_string() + " vs " +
                                m.shape_string());
  }
  Tensor out = w;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = w[i] * m[i];
  return out;
}

void apply_masks(ToyNet& net, const std::vector<Tensor>& masks) {
  auto params = net.params();
  if (masks.size() != params.size()) {
    throw std::invalid_argument("apply_masks: expected " + std::to_string(params.size()) +
                                " masks, got " + std::to_string(masks.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    *params[i].value = apply_mask(*params[i].value, masks[i]);
  }
}

}  // namespace mecllm::ecld
