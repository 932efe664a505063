#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace vulnformer::harness {

struct Prediction {
  double probability = 0.0;
  int label = 0;  // 1 = vulnerable
};

struct EvalReport {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double threshold = 0.5;
  std::vector<std::string> warnings;

  std::size_t total() const { return tp + fp + tn + fn; }
  nlohmann::json to_json() const;
  std::string to_markdown() const;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// A sample is predicted vulnerable when probability >= threshold. Ratios
// with a zero denominator are reported as 0 and noted in `warnings`.
// Throws kEmptyPredictions for no input, kInvalidConfig unless 0 < threshold < 1.
EvalReport compute_metrics(std::span<const Prediction> predictions, double threshold = 0.5);

}  // namespace vulnformer::harness
