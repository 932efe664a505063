#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vulnformer/harness/dataset.hpp"
#include "vulnformer/harness/trainer.hpp"
#include "vulnformer/model/config.hpp"

namespace vulnformer::harness {

struct AblationOptions {
  model::ModelConfig base;
  TrainConfig train;
  std::vector<model::AblationAxis> axes = {model::AblationAxis::kBaseline};
  std::uint64_t init_seed = 0;
  std::size_t threads = 0;  // feature extraction workers
};

struct AblationRun {
  model::AblationAxis axis = model::AblationAxis::kBaseline;
  model::ModelConfig config;  // resolved config actually trained
  EvalReport report;          // on the test split
  TrainHistory history;
  std::size_t parameter_count = 0;

  nlohmann::json to_json() const;
};

using AblationProgress = std::function<void(model::AblationAxis, const EpochRecord&)>;

// One fresh model per axis, trained on `train` (validated on `validation`)
// and scored on `test`. Throws kEmptyPredictions if the test split is empty.
std::vector<AblationRun> run_ablation(const DatasetSplit& data, const embedding::Vocabulary& vocab,
                                      const AblationOptions& options, const AblationProgress& progress = {});

std::string ablation_markdown(const std::vector<AblationRun>& runs);
std::string ablation_csv(const std::vector<AblationRun>& runs);

}  // namespace vulnformer::harness
