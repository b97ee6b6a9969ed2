#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mecllm/core/rng.hpp"
#include "mecllm/core/tensor.hpp"
#include "mecllm/ecld/distill.hpp"
#include "mecllm/ecld/masks.hpp"
#include "mecllm/ecld/toy_net.hpp"

namespace mecllm::ecld {

// Synthetic classification task: x ~ N(0, I), label = argmax(R x[:informative]).
// Dimensions past `informative_dims` carry no signal.
struct ToyTask {
  Matrix x;
  std::vector<int> labels;
};

struct TaskSpec {
  std::size_t informative_dims = 10;
  std::size_t n_train = 2048;
  std::size_t n_test = 1024;
  std::size_t n_calibration = 64;
};

struct TrainSpec {
  std::size_t epochs = 30;
  std::size_t batch = 64;
  double lr = 1e-2;
};

struct EcldConfig {
  std::uint64_t seed = 7;
  ToyNetSpec network;
  TaskSpec task;
  TrainSpec teacher;
  double theta_width = 0.6;
  double theta_depth = 0.6;
  DistillConfig distill;
  TrainSpec student{20, 64, 5e-3};
  // Explicit bit width; when unset it follows target_device.
  std::optional<int> bits;
  std::string target_device = "smartphone";
  std::size_t quant_grid = 32;
  bool quant_refine = true;
  std::filesystem::path accuracy_corpus;
  std::filesystem::path hallucination_corpus;
  double reference_storage_mb = 15316.53;
  double reference_energy_wh = 0.24;

  int resolved_bits() const;
  void validate() const;
};

// Relative paths in the corpus fields are resolved against base_dir.
EcldConfig ecld_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json to_json(const EcldConfig& c);

// smartphone -> 4 bits; laptop, edge -> 8 bits.
int device_bits(const std::string& device);

struct TensorQuantReport {
  std::string name;
  double a = 0.0, b = 0.0;
  std::size_t kept = 0;
  double error = 0.0;
  double naive_error = 0.0;
  bool degenerate = false;
};

struct CompressionReport {
  std::size_t parameters = 0;
  std::size_t width_popcount = 0;
  std::size_t depth_broadcast_popcount = 0;
  std::size_t combined_popcount = 0;
  std::size_t pruned_parameters = 0;
  std::vector<int> layers_kept;

  double teacher_accuracy = 0.0;
  double pruned_accuracy = 0.0;
  double distilled_accuracy = 0.0;
  double quantized_accuracy = 0.0;

  double teacher_loss = 0.0;
  double distill_loss = 0.0;
  double distill_ce = 0.0;
  double distill_kl = 0.0;

  int bits = 0;
  double quant_error = 0.0;
  double quant_naive_error = 0.0;
  std::vector<TensorQuantReport> tensors;

  double baseline_bits = 0.0;
  double compressed_bits = 0.0;
  double storage_ratio = 0.0;
  double energy_ratio = 0.0;
  double accessibility_mb = 0.0;
  double energy_wh = 0.0;

  double offline_accuracy = 0.0;
  double offline_hallucination = 0.0;

  std::string target_device;
};

ToyTask make_task(const TaskSpec& spec, std::size_t embed_dim, std::size_t classes,
                  const Matrix& rule, std::size_t n, Rng& rng);
double classification_accuracy(const ToyNet& net, const ToyTask& task);

// Cross-entropy training of a teacher; returns the final epoch's mean loss.
double train_teacher(ToyNet& net, const ToyTask& data, const TrainSpec& spec, Rng& rng);

struct DistillResult {
  double loss = 0.0, ce = 0.0, kl = 0.0;  // last-epoch means
};
// Distillation fine-tuning; the combined mask is re-applied after every step so
// pruned weights stay zero.
DistillResult distill_student(ToyNet& student, const ToyNet& teacher, const ToyTask& data,
                              const std::vector<Tensor>& mask, const DistillConfig& cfg,
                              const TrainSpec& spec, Rng& rng);

// Quantizes the surviving entries of every tensor; pruned entries stay 0.
std::vector<TensorQuantReport> quantize_net(ToyNet& net, const std::vector<Tensor>& mask,
                                            int bits, std::size_t grid, bool refine);

// Storage: kept weights at `bits` each, a 1-bit mask per original weight and a
// 64-bit (a, b) pair per tensor, against 64 bits per weight unpruned.
double compressed_storage_bits(std::size_t kept, std::size_t total, std::size_t tensors, int bits);

CompressionReport run_ecld(const EcldConfig& cfg);
nlohmann::json to_json(const CompressionReport& r);
// Table-I-style row plus the deployment stub.
nlohmann::json deployment_report(const CompressionReport& r);

}  // namespace mecllm::ecld
