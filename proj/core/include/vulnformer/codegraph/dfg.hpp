#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vulnformer/codegraph/cfg.hpp"

namespace vulnformer::codegraph {

enum class AccessKind { kDefinition, kModification, kUse };

// DFG kind_tag for an access site.
std::string_view access_kind_tag(AccessKind kind);
inline bool defines(AccessKind kind) { return kind != AccessKind::kUse; }

// One variable access site. Declarations and parameters are definitions;
// assignments and ++/-- on a plain identifier are modifications (a compound
// assignment or ++/-- also records a use first).
struct VariableAccess {
  AccessKind kind = AccessKind::kUse;
  std::string name;
  ByteRange span;
  int cfg_node = 0;
};

struct DataFlow {
  ControlFlowGraph cfg;
  // All access sites; index == DFG node id.
  std::vector<VariableAccess> sites;
  // Per CFG node, its sites in evaluation order.
  std::vector<std::vector<int>> node_sites;
  // def -> use edges (reaching definitions), tagged with the variable name.
  CodeGraph graph;
};

// Access sites of one CFG node's payload, in evaluation order.
std::vector<VariableAccess> collect_accesses(const SyntaxTree& tree, const SyntaxNode& payload);

DataFlow analyze_dataflow(const SyntaxTree& ast);

inline CodeGraph build_dfg(const SyntaxTree& ast) { return analyze_dataflow(ast).graph; }

}  // namespace vulnformer::codegraph
