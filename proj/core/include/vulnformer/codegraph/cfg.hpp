#pragma once

#include <vector>

#include "vulnformer/codegraph/graph.hpp"
#include "vulnformer/codegraph/syntax.hpp"

namespace vulnformer::codegraph {

inline constexpr int kCfgEntry = 0;
inline constexpr int kCfgExit = 1;

// Statement-level control flow for every function definition in a tree.
// Node 0 is the synthetic entry and node 1 the synthetic exit; statement
// nodes follow in source order. All functions share entry and exit.
//
// Edge tags: "next" (sequential), "true"/"false" (branch and loop tests),
// "case"/"default" (switch fan-out), "return", and "back" (loop update to
// loop test). goto and setjmp/longjmp are recorded as UnsupportedConstruct
// diagnostics and treated as straight-line statements.
struct ControlFlowGraph {
  CodeGraph graph;
  // Syntax whose variable accesses belong to each node: the condition of a
  // branch or loop test, the initializer/update of a for loop, a function's
  // parameter list, or the whole statement. nullptr for entry, exit and
  // pure jumps/labels. Points into the SyntaxTree the graph was built from.
  std::vector<const SyntaxNode*> payload;
};

ControlFlowGraph build_control_flow(const SyntaxTree& ast);

inline CodeGraph build_cfg(const SyntaxTree& ast) { return build_control_flow(ast).graph; }

}  // namespace vulnformer::codegraph
