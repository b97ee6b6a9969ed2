#include "mecllm/env/mec_env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mecllm/env/channel.hpp"
#include "mecllm/env/costs.hpp"

namespace mecllm::env {

MecEnv::MecEnv(SystemConfig config, std::uint64_t seed) : config_(std::move(config)), rng_(seed) {
  config_.validate();
  reset();
}

double MecEnv::draw_task_bits() {
  const auto& t = config_.task;
  return t.max_bits > t.min_bits ? rng_.uniform(t.min_bits, t.max_bits) : t.min_bits;
}

double MecEnv::draw_gain(std::size_t k) {
  return channel_gain(distances_[k], config_.ref_gain, config_.rician_k, rng_,
                      config_.deterministic_channel);
}

const EnvState& MecEnv::reset() {
  const std::size_t K = config_.num_mlus;
  positions_.clear();
  distances_.clear();
  for (std::size_t k = 0; k < K; ++k) {
    positions_.push_back(config_.positions.empty() ? sample_in_disc(config_.radius_m, rng_)
                                                   : config_.positions[k]);
    distances_.push_back(distance(positions_.back(), {0.0, 0.0}, config_.mec_height_m));
  }
  state_ = EnvState{};
  state_.mlus.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    auto& m = state_.mlus[k];
    m.accuracy = config_.qos.local.offline_accuracy;
    m.hallucination = config_.qos.local.offline_hallucination;
    m.task_bits = draw_task_bits();
    m.gain = draw_gain(k);
  }
  return state_;
}

StepOutcome MecEnv::step(const Action& action) {
  const std::size_t K = config_.num_mlus;
  if (action.alpha.size() != K || action.power_w.size() != K) {
    throw std::invalid_argument("MecEnv::step: action must carry K offloading ratios and powers");
  }
  if (state_.t >= config_.slots) throw std::logic_error("MecEnv::step: episode finished, call reset()");

  StepOutcome out;
  out.t = state_.t;
  out.mlus.resize(K);
  std::vector<double> powers(K), gains(K);
  for (std::size_t k = 0; k < K; ++k) {
    auto& d = out.mlus[k];
    d.alpha = std::clamp(action.alpha[k], 0.0, 1.0);
    d.power_w = std::clamp(action.power_w[k], 0.0, config_.mlus[k].p_max_w);
    d.task_bits = state_.mlus[k].task_bits;
    d.gain = state_.mlus[k].gain;
    powers[k] = d.power_w;
    gains[k] = d.gain;
  }

  const auto& q = config_.qos;
  std::vector<double> acc(K), hal(K), energy(K), budget(K);
  for (std::size_t k = 0; k < K; ++k) {
    auto& d = out.mlus[k];
    const auto& mlu = config_.mlus[k];
    const Qos local = sample_slot_qos(q.local, q.concentration, rng_);
    d.a_local = local.accuracy;
    d.h_local = local.hallucination;

    d.rate_bps = uplink_rate(k, powers, gains, config_.bandwidth_hz, config_.noise_power_w);
    const LocalCost lc =
        local_cost(d.alpha, d.task_bits, mlu.cpu_freq_hz, config_.cycles_per_bit, config_.energy_coeff);
    const OffloadCost oc = offload_cost(d.alpha, d.task_bits, d.rate_bps, d.power_w,
                                        config_.mec_cycles_per_bit, config_.mec_freq_hz,
                                        config_.slot_cap_s);
    d.l_local = lc.latency_s;
    d.e_local = lc.energy_j;
    d.l_off = oc.l_off_s;
    d.l_mec = oc.l_mec_s;
    d.e_off = oc.e_off_j;
    d.infeasible = oc.infeasible;
    d.latency = std::max(d.l_local, d.l_off + d.l_mec);

    const Qos blended = qos_blend(d.alpha, d.a_local, d.h_local, q.a_mec, q.resolved_h_mec());
    d.accuracy = blended.accuracy;
    d.hallucination = blended.hallucination;
    acc[k] = d.accuracy;
    hal[k] = d.hallucination;
    energy[k] = d.energy();
    budget[k] = mlu.e_max_j;
    out.total_latency += d.latency;
  }
  out.omega = penalty(acc, hal, energy, budget, q.a_min, q.h_max);
  out.reward = 1.0 / (out.total_latency + q.penalty_weight * out.omega.total());
  out.done = state_.t + 1 == config_.slots;

  for (std::size_t k = 0; k < K; ++k) {
    auto& m = state_.mlus[k];
    const auto& d = out.mlus[k];
    m.prev_alpha = d.alpha;
    m.prev_power_w = d.power_w;
    m.accuracy = d.accuracy;
    m.hallucination = d.hallucination;
    m.latency_s = d.latency;
  }
  for (std::size_t k = 0; k < K; ++k) {
    state_.mlus[k].task_bits = draw_task_bits();
    state_.mlus[k].gain = draw_gain(k);
  }
  ++state_.t;
  out.next_state = state_;
  return out;
}

std::vector<double> MecEnv::observe() const { return observe(state_, config_); }

std::vector<double> MecEnv::observe(const EnvState& s, const SystemConfig& c) {
  std::vector<double> obs;
  obs.reserve(kFeaturesPerMlu * s.mlus.size());
  for (std::size_t k = 0; k < s.mlus.size(); ++k) {
    const auto& m = s.mlus[k];
    obs.push_back(m.prev_alpha);
    obs.push_back(m.prev_power_w / c.mlus[k].p_max_w);
    obs.push_back(m.accuracy);
    obs.push_back(m.hallucination);
    obs.push_back(m.latency_s);
    obs.push_back(m.task_bits / 1e6);
    // Typical gains sit 20-27 dB below g0 inside the 20 m disc.
    obs.push_back((10.0 * std::log10(m.gain / c.ref_gain) + 23.5) / 5.0);
  }
  return obs;
}

Action MecEnv::action_from_unit(std::span<const double> unit) const {
  const std::size_t K = config_.num_mlus;
  if (unit.size() != 2 * K) throw std::invalid_argument("action_from_unit: expected 2K values");
  Action a;
  for (std::size_t k = 0; k < K; ++k) {
    a.alpha.push_back(std::clamp(unit[k], 0.0, 1.0));
    a.power_w.push_back(std::clamp(unit[K + k], 0.0, 1.0) * config_.mlus[k].p_max_w);
  }
  return a;
}

}  // namespace mecllm::env
