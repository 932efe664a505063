#pragma once

#include <string>
#include <string_view>

#include "vulnformer/codegraph/graph.hpp"

namespace vulnformer::codegraph {

// Graphviz text: one `nK [label=..., span="b:e"];` line per node in id
// order, then one `nA -> nB [label=...];` line per edge sorted by
// (src, dst, tag). Output is a pure function of the graph.
std::string to_dot(const CodeGraph& graph);

// Reads the subset of DOT that to_dot emits (node statements, edge
// statements, quoted or bare attribute values). Throws Error(kFormat).
CodeGraph parse_dot(std::string_view text);

}  // namespace vulnformer::codegraph
