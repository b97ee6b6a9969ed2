#include "mecllm/env/costs.hpp"

namespace mecllm::env {

LocalCost local_cost(double alpha, double task_bits, double cpu_freq_hz, double cycles_per_bit,
                     double energy_coeff) {
  const double cycles = (1.0 - alpha) * cycles_per_bit * task_bits;
  return {cycles / cpu_freq_hz, energy_coeff * cpu_freq_hz * cpu_freq_hz * cycles};
}

OffloadCost offload_cost(double alpha, double task_bits, double rate_bps, double power_w,
                         double cycles_per_bit, double mec_freq_hz, double slot_cap_s) {
  OffloadCost c;
  if (alpha <= 0.0) return c;
  const double bits = alpha * task_bits;
  if (rate_bps <= 0.0 || bits / rate_bps > slot_cap_s) {
    c.l_off_s = slot_cap_s;
    c.infeasible = true;
  } else {
    c.l_off_s = bits / rate_bps;
  }
  c.l_mec_s = alpha * cycles_per_bit * task_bits / mec_freq_hz;
  c.e_off_j = power_w * c.l_off_s;
  return c;
}

}  // namespace mecllm::env
