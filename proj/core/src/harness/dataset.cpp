#include "vulnformer/harness/dataset.hpp"

#include <unordered_set>

#include "vulnformer/error.hpp"
#include "vulnformer/io/files.hpp"

namespace vulnformer::harness {

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation" || name == "valid" || name == "val" || name == "dev") return Split::kValidation;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

SplitCounts count_labels(const std::vector<SourceUnit>& units) {
  SplitCounts c;
  for (const auto& u : units) {
    ++c.total;
    if (u.label == codegraph::Label::kVulnerable) ++c.vulnerable;
    if (u.label == codegraph::Label::kClean) ++c.clean;
  }
  return c;
}

std::vector<SourceUnit>& DatasetSplit::units(Split split) {
  switch (split) {
    case Split::kTrain: return train;
    case Split::kValidation: return validation;
    case Split::kTest: return test;
  }
  return train;
}

const std::vector<SourceUnit>& DatasetSplit::units(Split split) const {
  return const_cast<DatasetSplit*>(this)->units(split);
}

nlohmann::json DatasetSplit::counts_json() const {
  nlohmann::json out = nlohmann::json::object();
  for (Split s : kAllSplits) {
    SplitCounts c = counts(s);
    out[std::string(split_name(s))] = {{"total", c.total}, {"vulnerable", c.vulnerable}, {"clean", c.clean}};
  }
  return out;
}

namespace {

[[noreturn]] void schema(std::size_t line, const std::string& message) {
  throw Error(ErrorKind::kSchema, "line " + std::to_string(line) + ": " + message);
}

std::string string_field(const nlohmann::json& obj, const char* key, std::size_t line, bool required) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    if (required) schema(line, std::string("missing field '") + key + "'");
    return {};
  }
  if (!it->is_string()) schema(line, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

DatasetSplit parse_dataset(std::string_view text, std::string name, const std::filesystem::path& base_dir) {
  DatasetSplit data;
  data.name = std::move(name);
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      schema(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) schema(line_no, "record must be a JSON object");

    SourceUnit unit;
    auto id = obj.find("id");
    if (id == obj.end()) schema(line_no, "missing field 'id'");
    if (id->is_string()) {
      unit.id = id->get<std::string>();
    } else if (id->is_number_integer()) {
      unit.id = std::to_string(id->get<long long>());
    } else {
      schema(line_no, "field 'id' must be a string or integer");
    }
    unit.code = string_field(obj, "code", line_no, true);

    auto label = obj.find("label");
    if (label == obj.end()) schema(line_no, "missing field 'label'");
    if (!label->is_number_integer() || (label->get<long long>() != 0 && label->get<long long>() != 1)) {
      schema(line_no, "label must be 0 or 1, got " + label->dump());
    }
    unit.label = label->get<long long>() == 1 ? codegraph::Label::kVulnerable : codegraph::Label::kClean;

    std::string split_text = string_field(obj, "split", line_no, true);
    std::optional<Split> split = parse_split(split_text);
    if (!split) schema(line_no, "unknown split '" + split_text + "'");

    unit.vulnerability_type = string_field(obj, "cwe", line_no, false);
    std::string cse = string_field(obj, "cse", line_no, false);
    if (!cse.empty()) {
      std::filesystem::path p(cse);
      unit.embedding_path = (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
    }

    if (!seen.insert(unit.id).second) {
      throw Error(ErrorKind::kDuplicateId, "line " + std::to_string(line_no) + ": duplicate id '" + unit.id + "'");
    }
    data.units(*split).push_back(std::move(unit));
  }
  return data;
}

DatasetSplit load_dataset(const std::filesystem::path& path) {
  return parse_dataset(io::read_text(path), path.stem().string(), path.parent_path());
}

nlohmann::json unit_to_json(const SourceUnit& unit, Split split) {
  nlohmann::json obj = {{"id", unit.id}, {"code", unit.code}};
  if (unit.label) obj["label"] = static_cast<int>(*unit.label);
  obj["split"] = split_name(split);
  if (!unit.vulnerability_type.empty()) obj["cwe"] = unit.vulnerability_type;
  if (!unit.embedding_path.empty()) obj["cse"] = unit.embedding_path;
  return obj;
}

std::string dataset_to_jsonl(const DatasetSplit& data) {
  std::string out;
  for (Split s : kAllSplits)
    for (const auto& u : data.units(s)) out += unit_to_json(u, s).dump() + "\n";
  return out;
}

}  // namespace vulnformer::harness
