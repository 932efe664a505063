#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "vulnformer/codegraph/graph.hpp"
#include "vulnformer/codegraph/source_unit.hpp"

namespace vulnformer::codegraph {

// One named node of the concrete syntax tree. Node types follow the
// tree-sitter-c vocabulary (function_definition, if_statement, identifier,
// ...). Anonymous tokens such as operators are not nodes; an expression's
// operator is kept in `op`.
struct SyntaxNode {
  std::string_view kind;   // points at a static string
  std::string_view field;  // role in the parent ("condition", "body", ...) or empty
  std::string op;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<SyntaxNode> children;

  bool is_error() const { return kind == "ERROR"; }
  // First child with the given field name, or nullptr.
  const SyntaxNode* child(std::string_view field_name) const;
  ByteRange span() const { return {begin, end}; }
};

class SyntaxTree {
 public:
  SyntaxTree(std::string source, SyntaxNode root) : source_(std::move(source)), root_(std::move(root)) {}

  const std::string& source() const { return source_; }
  const SyntaxNode& root() const { return root_; }
  std::string_view text(const SyntaxNode& node) const {
    return std::string_view(source_).substr(node.begin, node.end - node.begin);
  }

  // Pre-order numbering; node 0 is the translation_unit. Edge tags are the
  // child's field name, or "child" when it has none.
  CodeGraph graph() const;

  std::size_t error_count() const;

 private:
  std::string source_;
  SyntaxNode root_;
};

// Pre-order visit; returning false from the callback skips the subtree.
void walk(const SyntaxNode& node, const std::function<bool(const SyntaxNode&)>& visit);

// Parses C source with statement-level error recovery. Unparseable regions
// become "ERROR" nodes. Throws Error(kParse) when nothing recognisable
// remains (empty input, or only ERROR nodes at the top level).
SyntaxTree parse(std::string source, Language language = Language::kC);

// AST extraction for a source unit: the tree plus its CodeGraph view.
inline SyntaxTree parse_ast(const SourceUnit& unit) { return parse(unit.code, unit.language); }

}  // namespace vulnformer::codegraph
