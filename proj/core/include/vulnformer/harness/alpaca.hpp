#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "vulnformer/harness/dataset.hpp"

namespace vulnformer::harness {

inline constexpr std::string_view kAlpacaInstruction =
    "Find potential security issues in the following code. If it has a vulnerability, output: "
    "Vulnerabilities Detected: type of vulnerability. otherwise output<no vulnerability detected>:";
inline constexpr std::string_view kDetectedPrefix = "Vulnerabilities Detected: ";
inline constexpr std::string_view kNoVulnerability = "no vulnerability detected";
// Used when a vulnerable unit carries no type (binary-labelled corpora).
inline constexpr std::string_view kGenericVulnerability = "unspecified vulnerability";

struct AlpacaRecord {
  std::string instruction;
  std::string input;
  std::string output;

  nlohmann::json to_json() const { return {{"instruction", instruction}, {"input", input}, {"output", output}}; }
};

// Throws kSchema for an unlabelled unit.
std::string alpaca_output(const SourceUnit& unit);
AlpacaRecord to_alpaca(const SourceUnit& unit);

// One JSON object per line, splits in train/validation/test order.
std::string export_alpaca(const DatasetSplit& data);

}  // namespace vulnformer::harness
