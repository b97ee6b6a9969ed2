#pragma once

#include <span>
#include <vector>

#include "mecllm/core/rng.hpp"
#include "mecllm/core/tensor.hpp"
#include "mecllm/diff/gaussian.hpp"
#include "mecllm/diff/mlp.hpp"
#include "mecllm/wm/rssm.hpp"

namespace mecllm::wm {

// Indices of the round(fraction * n) lowest scores, ascending by score; ties
// keep index order.
std::vector<std::size_t> select_low_uncertainty(std::span<const double> scores, double fraction);
// Scores are the per-row posterior-prior KL of the given latent states.
std::vector<std::size_t> select_low_uncertainty(const RssmState& states, double fraction);

// H imagined steps from B start states. states[j] is the (B, S) input the
// actor saw at step j (states[0] are the real start states); raw and noise
// are the sampled pre-squash actions.
struct Imagined {
  std::vector<Matrix> states;
  std::vector<Matrix> raw;
  std::vector<Matrix> noise;
  std::vector<std::vector<double>> rewards;  // decoded R_j
  Matrix final_states;                       // decoded S_H
  std::vector<double> returns;               // G = sum_j gamma^j R_j + gamma^H V(S_H)

  std::size_t horizon() const { return states.size(); }
  std::size_t batch() const { return returns.size(); }
  bool empty() const { return returns.empty(); }
};

// Encodes the start states with the posterior mean, then rolls the prior
// forward with sampled latents and actor actions. Draws only from rng.
Imagined imagine(const Rssm& model, const Matrix& start_states, const diff::GaussianPolicy& actor,
                 const diff::Mlp& critic, std::size_t horizon, double gamma, Rng& rng);

// Detached coefficients G_b - V(S_{b,j}), laid out step-major (j * B + b).
std::vector<double> imagination_coefficients(const Imagined& im, const diff::Mlp& critic);

// eta * mean_{b,j} -c_{b,j} log pi(A_{b,j} | S_{b,j}). Gradients reach only the actor.
double imagination_loss(const Imagined& im, std::span<const double> coefficients,
                        diff::GaussianPolicy& actor, double eta, bool accumulate);
double imagination_loss(const Imagined& im, diff::GaussianPolicy& actor, const diff::Mlp& critic,
                        double eta, bool accumulate);

}  // namespace mecllm::wm
