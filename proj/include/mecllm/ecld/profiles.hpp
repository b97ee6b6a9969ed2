#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

namespace mecllm::ecld {

struct VariantProfile {
  std::string name;
  double offline_accuracy = 0.0;       // [0, 1]
  double offline_hallucination = 0.0;  // [0, 1]
  double storage_mb = 0.0;             // > 0
  double energy_wh = 0.0;              // > 0

  void validate() const;
};

using ProfileCatalog = std::map<std::string, VariantProfile>;

// Llama-3.1-8B rows: original, quantization, pruning, pruning+distillation, ecld.
ProfileCatalog builtin_catalog();

nlohmann::json to_json(const VariantProfile& p);
nlohmann::json to_json(const ProfileCatalog& c);
ProfileCatalog catalog_from_json(const nlohmann::json& j);
ProfileCatalog load_catalog(const std::filesystem::path& path);

const VariantProfile& find_profile(const ProfileCatalog& c, const std::string& name);

}  // namespace mecllm::ecld
