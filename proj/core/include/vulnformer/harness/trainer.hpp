#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnformer/embedding/vocabulary.hpp"
#include "vulnformer/harness/metrics.hpp"
#include "vulnformer/model/model.hpp"

namespace vulnformer::harness {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 8;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;
  std::size_t patience = 10;  // epochs without a validation-F1 gain; 0 disables
  double threshold = 0.5;
  bool keep_best = true;  // restore the best-validation weights at the end

  void validate() const;  // kInvalidConfig
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& value);  // missing keys keep defaults
};

class Adam {
 public:
  Adam(std::vector<model::Tensor> params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  // One bias-corrected update from the current grads (absent grads count as 0).
  void step();
  std::size_t steps() const { return t_; }

 private:
  std::vector<model::Tensor> params_;
  std::vector<std::vector<float>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

// Features of one split, computed once and reused every epoch.
struct PreparedSplit {
  std::vector<std::string> ids;
  std::vector<model::SampleFeatures> features;
  std::vector<float> labels;
  std::size_t parse_failures = 0;

  std::size_t size() const { return features.size(); }
};

// threads == 0 picks the hardware concurrency. Result order follows `units`.
PreparedSplit prepare_split(const std::vector<codegraph::SourceUnit>& units, const embedding::Vocabulary& vocab,
                            const model::FusionConfig& fusion, std::size_t threads = 0,
                            codegraph::TruncationCounter* counter = nullptr);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> val_accuracy;
  std::optional<double> val_f1;
  std::size_t steps = 0;  // cumulative optimizer steps
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::optional<std::size_t> best_epoch;
  double best_val_f1 = 0.0;
  std::size_t total_steps = 0;
  bool early_stopped = false;

  nlohmann::json to_json() const;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch BCE training with Adam and a seeded shuffle. With a non-empty
// validation split the best-F1 weights are tracked (and restored when
// keep_best). Throws kDivergence on a non-finite loss, kEmptyInput for an
// empty training split.
TrainHistory train(model::ConformerModel& model, const PreparedSplit& train_split, const PreparedSplit* validation,
                   const TrainConfig& config, const EpochCallback& on_epoch = {});

std::vector<double> predict_probabilities(model::ConformerModel& model, const PreparedSplit& split,
                                          std::size_t batch_size = 32);
EvalReport evaluate(model::ConformerModel& model, const PreparedSplit& split, double threshold = 0.5,
                    std::size_t batch_size = 32);

}  // namespace vulnformer::harness
