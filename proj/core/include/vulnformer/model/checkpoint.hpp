#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "vulnformer/embedding/vocabulary.hpp"
#include "vulnformer/model/model.hpp"

namespace vulnformer::model {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointMeta {
  std::string ablation = "baseline";
  std::size_t trained_steps = 0;
  std::size_t epochs = 0;
  double threshold = 0.5;
  nlohmann::json extra = nlohmann::json::object();
};

struct Checkpoint {
  ConformerModel model;
  std::optional<embedding::Vocabulary> vocab;
  CheckpointMeta meta;
};

// Directory layout: model.dhmx (param/<name>, buffer/<name>), config.json,
// vocab.json (when a vocabulary is given). Output is byte-stable for equal
// inputs.
void save_checkpoint(const std::filesystem::path& dir, const ConformerModel& model,
                     const embedding::Vocabulary* vocab, const CheckpointMeta& meta);

// Throws kIo for missing files and kIncompatibleCheckpoint when the version,
// configuration or tensor shapes do not line up.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace vulnformer::model
