#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "mecllm/core/tensor.hpp"
#include "mecllm/diff/param.hpp"

namespace mecllm::diff {

// Versioned binary container of named tensors plus string metadata.
//
// Layout (little-endian host order):
//   magic "MECLCKPT" | u32 version | u64 n_meta | n_meta x (str key, str value)
//   | u64 n_tensors | n_tensors x (str name, u32 rank, rank x u64 dim,
//   prod(dims) x f64)
// where str is u64 length followed by raw bytes. Doubles are stored bit-exact.
class Checkpoint {
 public:
  static constexpr std::uint32_t kVersion = 1;

  void put_tensor(const std::string& name, const Tensor& t) { tensors_[name] = t; }
  bool has_tensor(const std::string& name) const { return tensors_.count(name) > 0; }
  const Tensor& tensor(const std::string& name) const;

  void put_meta(const std::string& key, const std::string& value) { meta_[key] = value; }
  bool has_meta(const std::string& key) const { return meta_.count(key) > 0; }
  const std::string& meta(const std::string& key) const;

  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

  std::string to_bytes() const;
  static Checkpoint from_bytes(const std::string& bytes);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  std::map<std::string, Tensor> tensors_;
  std::map<std::string, std::string> meta_;
};

void store_params(Checkpoint& ckpt, const ParamList& params, const std::string& prefix);
void restore_params(const Checkpoint& ckpt, const ParamList& params, const std::string& prefix);

}  // namespace mecllm::diff
