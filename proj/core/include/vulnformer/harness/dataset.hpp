#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnformer/codegraph/source_unit.hpp"

namespace vulnformer::harness {

using codegraph::SourceUnit;

enum class Split { kTrain, kValidation, kTest };

inline constexpr std::array<Split, 3> kAllSplits = {Split::kTrain, Split::kValidation, Split::kTest};

std::string_view split_name(Split split);
// Accepts train, validation (or valid/val/dev) and test.
std::optional<Split> parse_split(std::string_view name);

struct SplitCounts {
  std::size_t total = 0;
  std::size_t vulnerable = 0;
  std::size_t clean = 0;
  friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

SplitCounts count_labels(const std::vector<SourceUnit>& units);

struct DatasetSplit {
  std::string name;
  std::vector<SourceUnit> train;
  std::vector<SourceUnit> validation;
  std::vector<SourceUnit> test;

  std::vector<SourceUnit>& units(Split split);
  const std::vector<SourceUnit>& units(Split split) const;
  SplitCounts counts(Split split) const { return count_labels(units(split)); }
  std::size_t size() const { return train.size() + validation.size() + test.size(); }
  // Table-1 style summary: {"train": {total, vulnerable, clean}, ...}.
  nlohmann::json counts_json() const;
};

// JSONL with one {id, code, label, split[, cwe][, cse]} object per line; blank
// lines are skipped. Relative `cse` paths are resolved against `base_dir`.
// Throws kSchema (message carries the line number) or kDuplicateId.
DatasetSplit parse_dataset(std::string_view text, std::string name = {},
                           const std::filesystem::path& base_dir = {});
DatasetSplit load_dataset(const std::filesystem::path& path);  // kIo plus the above

nlohmann::json unit_to_json(const SourceUnit& unit, Split split);
std::string dataset_to_jsonl(const DatasetSplit& data);

}  // namespace vulnformer::harness
