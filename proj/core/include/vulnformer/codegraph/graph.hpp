#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vulnformer/error.hpp"

namespace vulnformer::codegraph {

enum class GraphKind { kAst, kCfg, kDfg };

std::string_view graph_kind_name(GraphKind kind);
// Accepts "ast", "AST", "cfg", ... Returns nullopt for anything else.
std::optional<GraphKind> parse_graph_kind(std::string_view text);

struct ByteRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const ByteRange&, const ByteRange&) = default;
};

struct GraphNode {
  int id = 0;
  std::string kind_tag;
  ByteRange span;
};

struct GraphEdge {
  int src = 0;
  int dst = 0;
  std::string tag;
};

// Non-fatal findings recorded while deriving a graph (e.g. a goto that was
// degraded to straight-line flow).
struct Diagnostic {
  ErrorKind kind = ErrorKind::kUnsupportedConstruct;
  std::string message;
  ByteRange span;
};

struct CodeGraph {
  GraphKind kind = GraphKind::kAst;
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  std::vector<Diagnostic> diagnostics;

  int add_node(std::string kind_tag, ByteRange span);
  // Exact (src, dst, tag) duplicates are ignored.
  void add_edge(int src, int dst, std::string tag);

  std::size_t node_count() const { return nodes.size(); }
  // Sorted, de-duplicated (src, dst) pairs.
  std::vector<std::pair<int, int>> edge_pairs() const;
  std::vector<int> out_degrees() const;

  // Throws Error(kFormat) when ids are not contiguous or an edge endpoint
  // is out of range.
  void validate() const;
};

struct AdjacencyMatrix {
  GraphKind kind = GraphKind::kAst;
  std::size_t size = 0;
  std::size_t true_node_count = 0;
  bool truncated = false;
  std::vector<std::uint8_t> data;  // size * size, row-major

  std::uint8_t at(std::size_t row, std::size_t col) const { return data[row * size + col]; }
};

// Per-kind count of graphs that lost nodes in to_adjacency. Safe to share
// between extraction workers.
struct TruncationCounter {
  std::atomic<std::size_t> ast{0};
  std::atomic<std::size_t> cfg{0};
  std::atomic<std::size_t> dfg{0};

  std::atomic<std::size_t>& for_kind(GraphKind kind);
  std::size_t total() const { return ast + cfg + dfg; }
};

inline constexpr std::size_t kDefaultMaxNodes = 256;

// Keeps the first `max_nodes` node ids; edges touching dropped nodes are
// discarded. The result is zero-padded to max_nodes x max_nodes.
AdjacencyMatrix to_adjacency(const CodeGraph& graph, std::size_t max_nodes = kDefaultMaxNodes,
                             TruncationCounter* counter = nullptr);

}  // namespace vulnformer::codegraph
