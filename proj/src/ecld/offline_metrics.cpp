#include "mecllm/ecld/offline_metrics.hpp"

#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace mecllm::ecld {

namespace {

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

std::string ascii_casefold(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

double offline_accuracy(std::span<const Prediction> predictions,
                        std::span<const Reference> references) {
  if (predictions.size() != references.size()) {
    throw std::invalid_argument("offline_accuracy: prediction and reference counts differ");
  }
  if (predictions.empty()) throw std::invalid_argument("offline_accuracy: empty input");
  std::unordered_map<std::string, const std::string*> answers;
  for (const auto& r : references) {
    if (!answers.emplace(r.id, &r.answer).second) {
      throw std::invalid_argument("offline_accuracy: duplicate reference id " + r.id);
    }
  }
  std::size_t hits = 0;
  std::unordered_map<std::string, bool> seen;
  for (const auto& p : predictions) {
    auto it = answers.find(p.id);
    if (it == answers.end()) throw std::invalid_argument("offline_accuracy: missing id " + p.id);
    if (!seen.emplace(p.id, true).second) {
      throw std::invalid_argument("offline_accuracy: duplicate prediction id " + p.id);
    }
    if (ascii_casefold(p.text).find(ascii_casefold(*it->second)) != std::string::npos) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double offline_hallucination(std::span<const ArticleLabels> articles) {
  if (articles.empty()) throw std::invalid_argument("offline_hallucination: empty input");
  std::size_t factual = 0, total = 0;
  for (const auto& a : articles) {
    if (a.labels.empty()) {
      throw std::invalid_argument("offline_hallucination: article " + a.article_id +
                                  " has no sentence labels");
    }
    for (int l : a.labels) {
      if (l != 0 && l != 1) {
        throw std::invalid_argument("offline_hallucination: labels must be 0 or 1");
      }
      factual += static_cast<std::size_t>(l);
    }
    total += a.labels.size();
  }
  return 1.0 - static_cast<double>(factual) / static_cast<double>(total);
}

void load_accuracy_jsonl(const std::filesystem::path& path, std::vector<Prediction>& predictions,
                         std::vector<Reference>& references) {
  for_each_jsonl(path, [&](const nlohmann::json& j) {
    const auto id = j.at("id").get<std::string>();
    predictions.push_back({id, j.at("prediction").get<std::string>()});
    references.push_back({id, j.at("answer").get<std::string>()});
  });
}

std::vector<ArticleLabels> load_hallucination_jsonl(const std::filesystem::path& path) {
  std::vector<ArticleLabels> out;
  for_each_jsonl(path, [&](const nlohmann::json& j) {
    out.push_back({j.at("article_id").get<std::string>(), j.at("labels").get<std::vector<int>>()});
  });
  return out;
}

}  // namespace mecllm::ecld
