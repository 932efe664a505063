#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace vulnformer::codegraph {

enum class TokenKind {
  kIdentifier,
  kKeyword,
  kNumber,
  kString,
  kChar,
  kPunct,
  kPreprocessor,  // whole directive line, only when directives are kept intact
  kUnknown,
  kEnd,
};

struct Token {
  TokenKind kind = TokenKind::kEnd;
  std::string_view text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct LexOptions {
  // When false, a directive such as `#define N 4` is lexed into ordinary
  // tokens (`#`, `define`, `N`, `4`) instead of one kPreprocessor token.
  bool directives_as_single_token = true;
};

bool is_c_keyword(std::string_view word);

// Lexes C source into tokens. Comments and whitespace are dropped. The
// returned views point into `source`; the last token is always kEnd.
std::vector<Token> lex(std::string_view source, LexOptions options = {});

}  // namespace vulnformer::codegraph
