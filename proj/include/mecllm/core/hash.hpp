#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mecllm {

// 64-bit FNV-1a; used to tag output files with the config they came from.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace mecllm
