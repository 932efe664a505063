#include "vulnformer/codegraph/graph.hpp"

#include <algorithm>
#include <cctype>

namespace vulnformer::codegraph {

std::string_view graph_kind_name(GraphKind kind) {
  switch (kind) {
    case GraphKind::kAst: return "AST";
    case GraphKind::kCfg: return "CFG";
    case GraphKind::kDfg: return "DFG";
  }
  return "AST";
}

std::optional<GraphKind> parse_graph_kind(std::string_view text) {
  std::string lower;
  for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "ast") return GraphKind::kAst;
  if (lower == "cfg") return GraphKind::kCfg;
  if (lower == "dfg") return GraphKind::kDfg;
  return std::nullopt;
}

int CodeGraph::add_node(std::string kind_tag, ByteRange span) {
  const int id = static_cast<int>(nodes.size());
  nodes.push_back(GraphNode{id, std::move(kind_tag), span});
  return id;
}

void CodeGraph::add_edge(int src, int dst, std::string tag) {
  for (const GraphEdge& e : edges) {
    if (e.src == src && e.dst == dst && e.tag == tag) return;
  }
  edges.push_back(GraphEdge{src, dst, std::move(tag)});
}

std::vector<std::pair<int, int>> CodeGraph::edge_pairs() const {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(edges.size());
  for (const GraphEdge& e : edges) pairs.emplace_back(e.src, e.dst);
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

std::vector<int> CodeGraph::out_degrees() const {
  std::vector<int> degree(nodes.size(), 0);
  for (const auto& [src, dst] : edge_pairs()) ++degree[static_cast<std::size_t>(src)];
  return degree;
}

void CodeGraph::validate() const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id != static_cast<int>(i)) {
      throw Error(ErrorKind::kFormat, "node ids are not contiguous at position " + std::to_string(i));
    }
  }
  const int n = static_cast<int>(nodes.size());
  for (const GraphEdge& e : edges) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) {
      throw Error(ErrorKind::kFormat, "edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                                          " references a missing node");
    }
  }
}

std::atomic<std::size_t>& TruncationCounter::for_kind(GraphKind kind) {
  switch (kind) {
    case GraphKind::kAst: return ast;
    case GraphKind::kCfg: return cfg;
    case GraphKind::kDfg: return dfg;
  }
  return ast;
}

AdjacencyMatrix to_adjacency(const CodeGraph& graph, std::size_t max_nodes, TruncationCounter* counter) {
  if (max_nodes < 1) throw Error(ErrorKind::kInvalidConfig, "max_nodes must be >= 1");
  AdjacencyMatrix m;
  m.kind = graph.kind;
  m.size = max_nodes;
  m.true_node_count = std::min(graph.nodes.size(), max_nodes);
  m.truncated = graph.nodes.size() > max_nodes;
  m.data.assign(max_nodes * max_nodes, 0);
  const auto limit = static_cast<int>(m.true_node_count);
  for (const GraphEdge& e : graph.edges) {
    if (e.src < limit && e.dst < limit && e.src >= 0 && e.dst >= 0) {
      m.data[static_cast<std::size_t>(e.src) * max_nodes + static_cast<std::size_t>(e.dst)] = 1;
    }
  }
  if (m.truncated && counter != nullptr) ++counter->for_kind(graph.kind);
  return m;
}

}  // namespace vulnformer::codegraph
