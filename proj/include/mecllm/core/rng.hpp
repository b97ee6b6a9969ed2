#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mecllm {

// Seedable random stream. Distribution objects are created per draw so the
// engine is the only state; serialize() captures it completely.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();                       // N(0, 1)
  double gamma(double shape);            // Gamma(shape, 1)
  double beta(double a, double b);
  std::size_t index(std::size_t n);      // uniform in [0, n)
  std::vector<std::size_t> permutation(std::size_t n);

  std::mt19937_64& engine() { return engine_; }

  std::string serialize() const;
  void deserialize(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

}  // namespace mecllm
