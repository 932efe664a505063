#include "vulnformer/harness/alpaca.hpp"

#include "vulnformer/error.hpp"

namespace vulnformer::harness {

std::string alpaca_output(const SourceUnit& unit) {
  if (!unit.label) throw Error(ErrorKind::kSchema, "unit '" + unit.id + "' has no label");
  if (*unit.label == codegraph::Label::kClean) return std::string(kNoVulnerability);
  const std::string_view type = unit.vulnerability_type.empty() ? kGenericVulnerability
                                                                : std::string_view(unit.vulnerability_type);
  return std::string(kDetectedPrefix) + std::string(type);
}

AlpacaRecord to_alpaca(const SourceUnit& unit) {
  return {std::string(kAlpacaInstruction), unit.code, alpaca_output(unit)};
}

std::string export_alpaca(const DatasetSplit& data) {
  std::string out;
  for (Split s : kAllSplits)
    for (const auto& u : data.units(s)) out += to_alpaca(u).to_json().dump() + "\n";
  return out;
}

}  // namespace vulnformer::harness
