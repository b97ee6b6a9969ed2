#pragma once

#include <span>
#include <vector>

#include "mecllm/core/tensor.hpp"
#include "mecllm/ecld/toy_net.hpp"

namespace mecllm::ecld {

// Keep flags (1.0 keep, 0.0 drop) per structural component of a ToyNet.
struct ComponentMask {
  Tensor layer;   // (layers)
  Tensor neuron;  // (layers, hidden)
  Tensor head;    // (layers, heads)
  Tensor embed;   // (embed_dim)

  static ComponentMask ones(const ToyNetSpec& spec);
};

// Masks aligned with ToyNet::tensors(). Entries are exactly 0.0 or 1.0.
struct PruningMask {
  std::vector<Tensor> width;
  Tensor depth;  // (layers)
  std::vector<Tensor> combined;
  ComponentMask components;

  std::size_t width_popcount() const;
  // Number of weight entries kept by the depth mask alone.
  std::size_t depth_broadcast_popcount() const;
  std::size_t combined_popcount() const;
};

// 1.0 where score >= theta, else 0.0.
Tensor threshold_mask(std::span<const double> scores, double theta);

// Weight-level width mask: an entry survives only if every neuron, head and
// embedding dimension it touches survives. Layer flags are ignored here.
std::vector<Tensor> expand_width(const ToyNetSpec& spec, const ComponentMask& m);
// Per-tensor broadcast of a layer mask; output-head tensors are always kept.
std::vector<Tensor> expand_depth(const ToyNetSpec& spec, const Tensor& depth);

// Weight-level mask that removes every weight touching a dropped component,
// including whole layers. Used for leave-one-out scoring.
std::vector<Tensor> expand_components(const ToyNetSpec& spec, const ComponentMask& m);

struct ImportanceScores;

PruningMask build_masks(const ToyNetSpec& spec, const ImportanceScores& scores,
                        double theta_width, double theta_depth);
PruningMask build_masks(const ToyNetSpec& spec, const ImportanceScores& scores, double theta);

// Elementwise product W ⊙ M; throws on shape mismatch.
Tensor apply_mask(const Tensor& w, const Tensor& m);
void apply_masks(ToyNet& net, const std::vector<Tensor>& masks);

}  // namespace mecllm::ecld
