#include "vulnformer/harness/case_study.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "vulnformer/io/files.hpp"
#include "vulnformer/model/features.hpp"

namespace vulnformer::harness {

namespace fs = std::filesystem;

nlohmann::json CaseVerdict::to_json() const {
  return {{"name", name},
          {"p_vulnerable", p_vulnerable},
          {"p_patched", p_patched},
          {"resolved", resolved},
          {"model_untrained", model_untrained},
          {"verdict", verdict}};
}

CaseVerdict case_eval(model::ConformerModel& model, const embedding::Vocabulary& vocab, const CasePair& pair,
                      double threshold, bool trained) {
  const auto& fusion = model.config().fusion;
  model::SampleFeatures vuln = model::extract_features(pair.vulnerable, vocab, fusion);
  model::SampleFeatures fixed = model::extract_features(pair.patched, vocab, fusion);
  for (const auto* f : {&vuln, &fixed}) {
    if (!f->parsed) throw Error(ErrorKind::kParse, pair.name + ": " + f->parse_error);
  }
  const model::SampleFeatures* batch[] = {&vuln, &fixed};
  std::vector<double> probs = model.predict(batch);
  CaseVerdict v;
  v.name = pair.name;
  v.p_vulnerable = probs[0];
  v.p_patched = probs[1];
  v.resolved = v.p_vulnerable >= threshold && threshold > v.p_patched;
  v.model_untrained = !trained;
  v.verdict = v.resolved ? "resolved" : "unresolved";
  if (v.model_untrained) v.verdict += " (model-untrained)";
  return v;
}

std::vector<CasePair> load_case_pairs(const fs::path& dir, std::vector<std::string>* unmatched) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::kIo, "pairs directory not found: " + dir.string());
  std::map<std::string, std::pair<fs::path, fs::path>> found;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::string file = path.filename().string();
    if (file.ends_with(".vuln.c")) {
      found[file.substr(0, file.size() - 7)].first = path;
    } else if (file.ends_with(".fixed.c")) {
      found[file.substr(0, file.size() - 8)].second = path;
    }
  }
  std::vector<CasePair> pairs;
  for (const auto& [name, paths] : found) {
    if (paths.first.empty() || paths.second.empty()) {
      if (unmatched) unmatched->push_back((paths.first.empty() ? paths.second : paths.first).filename().string());
      continue;
    }
    CasePair pair;
    pair.name = name;
    pair.vulnerable = {name + ".vuln", io::read_text(paths.first)};
    pair.vulnerable.label = codegraph::Label::kVulnerable;
    pair.patched = {name + ".fixed", io::read_text(paths.second)};
    pair.patched.label = codegraph::Label::kClean;
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::string case_table_markdown(const std::vector<CaseVerdict>& verdicts) {
  std::string out = "| Pair | P(vulnerable) | P(patched) | Verdict |\n|---|---:|---:|---|\n";
  std::size_t resolved = 0;
  for (const auto& v : verdicts) {
    char probs[64];
    std::snprintf(probs, sizeof probs, "%.4f | %.4f", v.p_vulnerable, v.p_patched);
    out += "| " + v.name + " | " + probs + " | " + v.verdict + " |\n";
    if (v.resolved) ++resolved;
  }
  out += "\n" + std::to_string(resolved) + " of " + std::to_string(verdicts.size()) + " pairs resolved\n";
  return out;
}

}  // namespace vulnformer::harness
