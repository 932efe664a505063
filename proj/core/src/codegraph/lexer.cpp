#include "vulnformer/codegraph/lexer.hpp"

#include <algorithm>
#include <array>

namespace vulnformer::codegraph {
namespace {

constexpr std::array<std::string_view, 44> kKeywords = {
    "auto",     "break",    "case",          "char",         "const",
    "continue", "default",  "do",            "double",       "else",
    "enum",     "extern",   "float",         "for",          "goto",
    "if",       "inline",   "int",           "long",         "register",
    "restrict", "return",   "short",         "signed",       "sizeof",
    "static",   "struct",   "switch",        "typedef",      "union",
    "unsigned", "void",     "volatile",      "while",        "_Bool",
    "_Complex", "_Atomic",  "_Noreturn",     "_Thread_local", "_Alignas",
    "_Alignof", "_Static_assert", "__inline", "__restrict"};

// Longest match first.
constexpr std::array<std::string_view, 47> kPunctuators = {
    "...", "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
    "&&",  "||",  "*=",  "/=", "%=", "+=", "-=", "&=", "^=", "|=", "##", "[",
    "]",   "(",   ")",   "{",  "}",  ".",  "&",  "*",  "+",  "-",  "~",  "!",
    "/",   "%",   "<",   ">",  "^",  "|",  "?",  ":",  ";",  "=",  ","};

bool ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
bool digit(char c) { return c >= '0' && c <= '9'; }

class Lexer {
 public:
  Lexer(std::string_view src, LexOptions options) : src_(src), options_(options) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    bool line_start = true;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\n') {
        line_start = true;
        ++pos_;
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
        ++pos_;
        continue;
      }
      if (c == '\\' && peek(1) == '\n') {
        pos_ += 2;
        continue;
      }
      if (c == '/' && peek(1) == '/') {
        skip_line_comment();
        continue;
      }
      if (c == '/' && peek(1) == '*') {
        skip_block_comment();
        continue;
      }
      const std::size_t begin = pos_;
      if (c == '#' && line_start && options_.directives_as_single_token) {
        skip_directive();
        out.push_back(make(TokenKind::kPreprocessor, begin));
        continue;
      }
      line_start = false;
      if (ident_start(c)) {
        while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
        // Prefixed literals: L"..", u8"..", L'x'.
        std::string_view word = src_.substr(begin, pos_ - begin);
        if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'') &&
            (word == "L" || word == "u" || word == "U" || word == "u8")) {
          const char quote = src_[pos_];
          skip_quoted(quote);
          out.push_back(make(quote == '"' ? TokenKind::kString : TokenKind::kChar, begin));
          continue;
        }
        out.push_back(make(is_c_keyword(word) ? TokenKind::kKeyword : TokenKind::kIdentifier, begin));
        continue;
      }
      if (digit(c) || (c == '.' && digit(peek(1)))) {
        lex_number();
        out.push_back(make(TokenKind::kNumber, begin));
        continue;
      }
      if (c == '"' || c == '\'') {
        skip_quoted(c);
        out.push_back(make(c == '"' ? TokenKind::kString : TokenKind::kChar, begin));
        continue;
      }
      bool matched = false;
      for (std::string_view p : kPunctuators) {
        if (src_.substr(pos_, p.size()) == p) {
          pos_ += p.size();
          matched = true;
          break;
        }
      }
      if (!matched) {
        // `#` outside a directive position, `@`, `$`, `\`, stray bytes.
        ++pos_;
        if (c == '#') {
          out.push_back(make(TokenKind::kPunct, begin));
          continue;
        }
        out.push_back(make(TokenKind::kUnknown, begin));
        continue;
      }
      out.push_back(make(TokenKind::kPunct, begin));
    }
    Token end;
    end.kind = TokenKind::kEnd;
    end.begin = end.end = src_.size();
    end.text = src_.substr(src_.size());
    out.push_back(end);
    return out;
  }

 private:
  char peek(std::size_t ahead) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  Token make(TokenKind kind, std::size_t begin) const {
    Token t;
    t.kind = kind;
    t.begin = begin;
    t.end = pos_;
    t.text = src_.substr(begin, pos_ - begin);
    return t;
  }

  void skip_line_comment() {
    while (pos_ < src_.size() && src_[pos_] != '\n') {
      if (src_[pos_] == '\\' && peek(1) == '\n') ++pos_;
      ++pos_;
    }
  }

  void skip_block_comment() {
    pos_ += 2;
    while (pos_ < src_.size() && !(src_[pos_] == '*' && peek(1) == '/')) ++pos_;
    pos_ = std::min(src_.size(), pos_ + 2);
  }

  void skip_directive() {
    while (pos_ < src_.size() && src_[pos_] != '\n') {
      if (src_[pos_] == '\\' && peek(1) == '\n') {
        pos_ += 2;
        continue;
      }
      if (src_[pos_] == '/' && peek(1) == '*') {
        skip_block_comment();
        continue;
      }
      ++pos_;
    }
  }

  void skip_quoted(char quote) {
    ++pos_;
    while (pos_ < src_.size() && src_[pos_] != quote && src_[pos_] != '\n') {
      if (src_[pos_] == '\\' && pos_ + 1 < src_.size()) ++pos_;
      ++pos_;
    }
    if (pos_ < src_.size() && src_[pos_] == quote) ++pos_;
  }

  void lex_number() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (ident_char(c) || c == '.') {
        ++pos_;
      } else if ((c == '+' || c == '-') && pos_ > 0) {
        const char prev = src_[pos_ - 1];
        if (prev == 'e' || prev == 'E' || prev == 'p' || prev == 'P') {
          ++pos_;
        } else {
          break;
        }
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  LexOptions options_;
  std::size_t pos_ = 0;
};

}  // namespace

bool is_c_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

std::vector<Token> lex(std::string_view source, LexOptions options) {
  return Lexer(source, options).run();
}

}  // namespace vulnformer::codegraph
