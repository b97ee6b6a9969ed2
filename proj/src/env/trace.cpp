#include "mecllm/env/trace.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace mecllm::env {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_trace_header(std::ostream& os, const std::string& config_hash, std::uint64_t seed) {
  os << "# config_hash=" << config_hash << " seed=" << seed << "\n"
     << "episode,t,k,alpha,power_w,task_bits,gain,rate_bps,l_local,l_off,l_mec,latency,"
        "e_local,e_off,a_local,h_local,accuracy,hallucination,infeasible,"
        "omega_accuracy,omega_hallucination,omega_energy,reward,done\n";
}

void write_trace_rows(std::ostream& os, std::size_t episode, const StepOutcome& o) {
  for (std::size_t k = 0; k < o.mlus.size(); ++k) {
    const auto& d = o.mlus[k];
    const double fields[] = {d.alpha,   d.power_w, d.task_bits, d.gain,    d.rate_bps,
                             d.l_local, d.l_off,   d.l_mec,     d.latency, d.e_local,
                             d.e_off,   d.a_local, d.h_local,   d.accuracy, d.hallucination};
    os << episode << ',' << o.t << ',' << k;
    for (double f : fields) os << ',' << format_double(f);
    os << ',' << (d.infeasible ? 1 : 0) << ',' << format_double(o.omega.accuracy) << ','
       << format_double(o.omega.hallucination) << ',' << format_double(o.omega.energy) << ','
       << format_double(o.reward) << ',' << (o.done ? 1 : 0) << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, const std::string& config_hash,
                     std::uint64_t seed, const std::vector<std::vector<StepOutcome>>& episodes) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write trace " + path.string());
  write_trace_header(os, config_hash, seed);
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    for (const auto& o : episodes[e]) write_trace_rows(os, e, o);
  }
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace mecllm::env
