#pragma once

#include <optional>
#include <string>

namespace vulnformer::codegraph {

enum class Language { kC };

enum class Label { kClean = 0, kVulnerable = 1 };

struct SourceUnit {
  std::string id;
  std::string code;
  Language language = Language::kC;
  std::optional<Label> label;
  // Free-text vulnerability class (e.g. "CWE-787"); empty when unknown.
  std::string vulnerability_type;
  // Optional path to a precomputed embedding matrix for this unit.
  std::string embedding_path;
};

}  // namespace vulnformer::codegraph
