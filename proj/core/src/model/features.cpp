#include "vulnformer/model/features.hpp"

#include <algorithm>

#include "vulnformer/codegraph/cfg.hpp"
#include "vulnformer/codegraph/dfg.hpp"
#include "vulnformer/codegraph/syntax.hpp"
#include "vulnformer/embedding/embedder.hpp"
#include "vulnformer/numerics/ops.hpp"

namespace vulnformer::model {

using codegraph::GraphKind;
using numerics::Tensor;

Tensor pooling_matrix(std::size_t length, std::size_t nodes, GraphPooling pooling) {
  Tensor pool = Tensor::zeros({length, nodes});
  auto p = pool.mutable_values();
  if (nodes == 0) return pool;
  for (std::size_t t = 0; t < length; ++t) {
    if (pooling == GraphPooling::kZeroPad) {
      if (t < nodes) p[t * nodes + t] = 1.0f;
      continue;
    }
    std::size_t lo = t * nodes / length;
    std::size_t hi = ((t + 1) * nodes + length - 1) / length;
    for (std::size_t j = lo; j < hi; ++j) p[t * nodes + j] = 1.0f / static_cast<float>(hi - lo);
  }
  return pool;
}

namespace {

GraphInput graph_input(const codegraph::AdjacencyMatrix& adj, std::size_t length, GraphPooling pooling) {
  const std::size_t n = adj.true_node_count;
  GraphInput out;
  out.nodes = n;
  Tensor pool = pooling_matrix(length, n, pooling);
  // mix = pool * A[0:n, 0:n]; A is sparse so accumulate per edge.
  std::vector<float> mix(length * n, 0.0f);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (adj.at(i, j) == 0) continue;
      for (std::size_t t = 0; t < length; ++t) mix[t * n + j] += pool.values()[t * n + i];
    }
  out.mix = Tensor::from_values({length, n}, std::move(mix));
  return out;
}

}  // namespace

SampleFeatures features_from_parts(std::vector<std::int32_t> ids, std::optional<Tensor> cse,
                                   const std::array<const codegraph::AdjacencyMatrix*, 3>& adjacency,
                                   const FusionConfig& fusion) {
  SampleFeatures out;
  if (cse) {
    if (cse->rank() != 2 || cse->cols() != fusion.cse_dim) {
      throw Error(ErrorKind::kShapeMismatch, "ingested embedding " + numerics::shape_string(cse->shape()) +
                                                 " vs cse_dim " + std::to_string(fusion.cse_dim));
    }
    if (cse->rows() > fusion.max_length) *cse = numerics::slice_rows(*cse, 0, fusion.max_length).detach();
    out.length = std::max<std::size_t>(cse->rows(), 1);
    if (cse->rows() == 0) cse = Tensor::zeros({1, fusion.cse_dim});
  } else {
    if (ids.size() > fusion.max_length) ids.resize(fusion.max_length);
    if (ids.empty()) ids.push_back(embedding::kPadId);
    out.length = ids.size();
  }
  out.ids = std::move(ids);
  out.cse = std::move(cse);
  for (std::size_t k = 0; k < 3; ++k) {
    auto kind = static_cast<GraphKind>(k);
    if (!fusion.uses(kind) || adjacency[k] == nullptr) {
      out.graphs[k] = {Tensor::zeros({out.length, 0}), 0};
    } else {
      out.graphs[k] = graph_input(*adjacency[k], out.length, fusion.pooling);
    }
  }
  return out;
}

SampleFeatures extract_features(const codegraph::SourceUnit& unit, const embedding::Vocabulary& vocab,
                                const FusionConfig& fusion, codegraph::TruncationCounter* counter) {
  std::vector<std::int32_t> ids;
  std::optional<Tensor> cse;
  if (fusion.use_cse && fusion.embedder == embedding::EmbedderKind::kIngested) {
    if (unit.embedding_path.empty()) {
      throw Error(ErrorKind::kSchema, "unit '" + unit.id + "' has no embedding path for the ingested embedder");
    }
    cse = embedding::ingest_embeddings(unit.embedding_path, fusion.cse_dim).values;
  } else {
    ids = embedding::tokenize(unit, vocab, fusion.max_length).ids;
  }

  std::array<std::optional<codegraph::AdjacencyMatrix>, 3> adj;
  bool parsed = true;
  std::string parse_error;
  if (fusion.graph_count() > 0) {
    try {
      codegraph::SyntaxTree tree = codegraph::parse_ast(unit);
      if (fusion.use_ast) adj[0] = codegraph::to_adjacency(tree.graph(), fusion.max_nodes, counter);
      if (fusion.use_cfg || fusion.use_dfg) {
        codegraph::DataFlow flow = codegraph::analyze_dataflow(tree);
        if (fusion.use_cfg) adj[1] = codegraph::to_adjacency(flow.cfg.graph, fusion.max_nodes, counter);
        if (fusion.use_dfg) adj[2] = codegraph::to_adjacency(flow.graph, fusion.max_nodes, counter);
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kParse) throw;
      parsed = false;
      parse_error = e.what();
    }
  }
  std::array<const codegraph::AdjacencyMatrix*, 3> ptrs{};
  for (std::size_t k = 0; k < 3; ++k) ptrs[k] = adj[k] ? &*adj[k] : nullptr;
  SampleFeatures out = features_from_parts(std::move(ids), std::move(cse), ptrs, fusion);
  out.parsed = parsed;
  out.parse_error = std::move(parse_error);
  return out;
}

}  // namespace vulnformer::model
