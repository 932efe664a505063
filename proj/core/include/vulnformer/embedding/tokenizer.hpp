#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vulnformer/codegraph/source_unit.hpp"

namespace vulnformer::embedding {

inline constexpr std::size_t kMaxSequenceLength = 768;

using PreserveList = std::set<std::string, std::less<>>;

// Splits an identifier at underscores (kept as "_" tokens) and camelCase
// boundaries: "drc_set_unusable" -> drc _ set _ unusable,
// "getHTTPHeader" -> get HTTP Header.
std::vector<std::string> split_identifier(std::string_view word);

// Lexical tokens of `code`; identifiers on `preserve` stay whole, others are
// split. Stops after `max_length` tokens.
std::vector<std::string> code_tokens(std::string_view code, const PreserveList& preserve,
                                     std::size_t max_length = kMaxSequenceLength);

// Function and variable names declared in `code` (empty if it does not parse).
PreserveList declared_names(std::string_view code);

}  // namespace vulnformer::embedding
