#pragma once

namespace mecllm::env {

struct LocalCost {
  double latency_s = 0.0;
  double energy_j = 0.0;
};

// L = (1 - alpha) phi X / f, E = kappa f^2 (1 - alpha) phi X.
LocalCost local_cost(double alpha, double task_bits, double cpu_freq_hz, double cycles_per_bit,
                     double energy_coeff);

struct OffloadCost {
  double l_off_s = 0.0;
  double l_mec_s = 0.0;
  double e_off_j = 0.0;
  bool infeasible = false;  // uplink latency hit the slot cap
};

// L_off = alpha X / r, L_MEC = alpha phi X / F, E_off = p L_off. When alpha > 0
// and the uplink cannot deliver within slot_cap_s (including r = 0), L_off is
// set to slot_cap_s and the slot is flagged infeasible.
OffloadCost offload_cost(double alpha, double task_bits, double rate_bps, double power_w,
                         double cycles_per_bit, double mec_freq_hz, double slot_cap_s);

}  // namespace mecllm::env
