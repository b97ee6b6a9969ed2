#include "mecllm/ecld/profiles.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace mecllm::ecld {

void VariantProfile::validate() const {
  auto prob = [&](double v, const char* field) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("profile " + name + ": " + field + " must lie in [0, 1]");
    }
  };
  prob(offline_accuracy, "offline_accuracy");
  prob(offline_hallucination, "offline_hallucination");
  if (!(storage_mb > 0.0) || !std::isfinite(storage_mb)) {
    throw std::invalid_argument("profile " + name + ": storage_mb must be > 0");
  }
  if (!(energy_wh > 0.0) || !std::isfinite(energy_wh)) {
    throw std::invalid_argument("profile " + name + ": energy_wh must be > 0");
  }
}

ProfileCatalog builtin_catalog() {
  const VariantProfile rows[] = {
      {"llama3.1-8b/original", 0.7030, 0.77, 15316.53, 0.24},
      {"llama3.1-8b/quantization", 0.2499, 0.82, 4308.13, 0.13},
      {"llama3.1-8b/pruning", 0.3076, 0.70, 13236.46, 0.27},
      {"llama3.1-8b/pruning+distillation", 0.6211, 0.85, 13236.46, 0.20},
      {"llama3.1-8b/ecld", 0.5905, 0.65, 3336.18, 0.12},
  };
  ProfileCatalog c;
  for (const auto& r : rows) c.emplace(r.name, r);
  return c;
}

nlohmann::json to_json(const VariantProfile& p) {
  return {{"offline_accuracy", p.offline_accuracy},
          {"offline_hallucination", p.offline_hallucination},
          {"storage_mb", p.storage_mb},
          {"energy_wh", p.energy_wh}};
}

nlohmann::json to_json(const ProfileCatalog& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, p] : c) j[name] = to_json(p);
  return j;
}

ProfileCatalog catalog_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("profile catalog must be a JSON object");
  ProfileCatalog c;
  for (const auto& [name, v] : j.items()) {
    VariantProfile p;
    p.name = name;
    p.offline_accuracy = v.at("offline_accuracy").get<double>();
    p.offline_hallucination = v.at("offline_hallucination").get<double>();
    p.storage_mb = v.at("storage_mb").get<double>();
    p.energy_wh = v.at("energy_wh").get<double>();
    p.validate();
    c.emplace(name, p);
  }
  return c;
}

ProfileCatalog load_catalog(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open profile catalog " + path.string());
  return catalog_from_json(nlohmann::json::parse(is));
}

const VariantProfile& find_profile(const ProfileCatalog& c, const std::string& name) {
  auto it = c.find(name);
  if (it == c.end()) throw std::invalid_argument("unknown variant profile: " + name);
  return it->second;
}

}  // namespace mecllm::ecld
