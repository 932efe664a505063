#include "vulnformer/embedding/tokenizer.hpp"

#include <cctype>

#include "vulnformer/codegraph/dfg.hpp"
#include "vulnformer/codegraph/lexer.hpp"
#include "vulnformer/codegraph/syntax.hpp"
#include "vulnformer/error.hpp"

namespace vulnformer::embedding {

namespace {

bool upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
bool lower(char c) { return std::islower(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::vector<std::string> split_identifier(std::string_view word) {
  std::vector<std::string> out;
  std::string piece;
  auto flush = [&] {
    if (!piece.empty()) out.push_back(std::move(piece));
    piece.clear();
  };
  for (std::size_t i = 0; i < word.size(); ++i) {
    char c = word[i];
    if (c == '_') {
      flush();
      out.emplace_back("_");
      continue;
    }
    if (!piece.empty() && upper(c)) {
      char prev = piece.back();
      bool next_lower = i + 1 < word.size() && lower(word[i + 1]);
      // aB -> a|B ; ABc -> A|Bc
      if (!upper(prev) || next_lower) flush();
    }
    piece += c;
  }
  flush();
  return out;
}

std::vector<std::string> code_tokens(std::string_view code, const PreserveList& preserve, std::size_t max_length) {
  std::vector<std::string> out;
  codegraph::LexOptions options;
  options.directives_as_single_token = false;
  for (const codegraph::Token& tok : codegraph::lex(code, options)) {
    if (tok.kind == codegraph::TokenKind::kEnd || out.size() >= max_length) break;
    if (tok.kind == codegraph::TokenKind::kIdentifier && !preserve.contains(tok.text)) {
      for (auto& piece : split_identifier(tok.text)) {
        if (out.size() >= max_length) break;
        out.push_back(std::move(piece));
      }
    } else {
      out.emplace_back(tok.text);
    }
  }
  return out;
}

PreserveList declared_names(std::string_view code) {
  PreserveList names;
  try {
    codegraph::SyntaxTree tree = codegraph::parse(std::string(code));
    codegraph::walk(tree.root(), [&](const codegraph::SyntaxNode& node) {
      if (node.kind == "function_declarator") {
        const codegraph::SyntaxNode* name = node.child("declarator");
        if (name != nullptr && name->kind == "identifier") names.emplace(tree.text(*name));
      }
      return true;
    });
    for (const auto& site : codegraph::analyze_dataflow(tree).sites) {
      if (site.kind == codegraph::AccessKind::kDefinition) names.insert(site.name);
    }
  } catch (const Error&) {
    // unparseable code contributes no names
  }
  return names;
}

}  // namespace vulnformer::embedding
