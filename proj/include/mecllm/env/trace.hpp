#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "mecllm/env/mec_env.hpp"

namespace mecllm::env {

// One row per (episode, t, k). The first line is a comment carrying the
// config hash and seed; numbers are printed with 17 significant digits.
void write_trace_header(std::ostream& os, const std::string& config_hash, std::uint64_t seed);
void write_trace_rows(std::ostream& os, std::size_t episode, const StepOutcome& outcome);
void write_trace_csv(const std::filesystem::path& path, const std::string& config_hash,
                     std::uint64_t seed, const std::vector<std::vector<StepOutcome>>& episodes);

// printf("%.17g") so equal doubles always print to equal text.
std::string format_double(double v);

}  // namespace mecllm::env
