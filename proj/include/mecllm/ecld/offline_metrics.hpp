#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mecllm::ecld {

struct Prediction {
  std::string id;
  std::string text;
};

struct Reference {
  std::string id;
  std::string answer;
};

struct ArticleLabels {
  std::string article_id;
  std::vector<int> labels;  // 1 = factual sentence
};

std::string ascii_casefold(std::string s);

// Fraction of ids whose prediction contains the reference answer (ASCII
// case-folded substring). Both streams must cover the same ids exactly once.
double offline_accuracy(std::span<const Prediction> predictions,
                        std::span<const Reference> references);

// Pooled non-factual sentence ratio: 1 - sum(labels) / total sentence count.
double offline_hallucination(std::span<const ArticleLabels> articles);

// JSONL readers. Accuracy lines are {"id", "prediction", "answer"} and are
// split into the two streams; hallucination lines are {"article_id", "labels"}.
void load_accuracy_jsonl(const std::filesystem::path& path, std::vector<Prediction>& predictions,
                         std::vector<Reference>& references);
std::vector<ArticleLabels> load_hallucination_jsonl(const std::filesystem::path& path);

}  // namespace mecllm::ecld
