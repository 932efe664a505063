#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnformer/embedding/vocabulary.hpp"
#include "vulnformer/harness/dataset.hpp"
#include "vulnformer/model/model.hpp"

namespace vulnformer::harness {

struct CasePair {
  std::string name;
  SourceUnit vulnerable;
  SourceUnit patched;
};

struct CaseVerdict {
  std::string name;
  double p_vulnerable = 0.0;
  double p_patched = 0.0;
  bool resolved = false;  // p_vulnerable >= threshold > p_patched
  bool model_untrained = false;
  std::string verdict;  // "resolved" / "unresolved", suffixed " (model-untrained)" when flagged

  nlohmann::json to_json() const;
};

// Scores both versions. `trained` false marks the verdict "model-untrained".
CaseVerdict case_eval(model::ConformerModel& model, const embedding::Vocabulary& vocab, const CasePair& pair,
                      double threshold = 0.5, bool trained = true);

// Pairs <name>.vuln.c / <name>.fixed.c from a directory, sorted by name.
// Files without a partner are listed in `unmatched` and skipped.
std::vector<CasePair> load_case_pairs(const std::filesystem::path& dir, std::vector<std::string>* unmatched = nullptr);

std::string case_table_markdown(const std::vector<CaseVerdict>& verdicts);

}  // namespace vulnformer::harness
