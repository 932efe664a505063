#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "vulnformer/codegraph/graph.hpp"
#include "vulnformer/codegraph/source_unit.hpp"
#include "vulnformer/embedding/vocabulary.hpp"
#include "vulnformer/model/config.hpp"
#include "vulnformer/numerics/tensor.hpp"

namespace vulnformer::model {

// Structural input of one graph, already pooled to the sample length:
// mix = Pool[L x n] * A[n x n], so S_g = mix * E_g[0:n].
struct GraphInput {
  numerics::Tensor mix;
  std::size_t nodes = 0;
};

// Everything the model needs for one function, with the input-independent
// work (parsing, graphs, tokenization) done once.
struct SampleFeatures {
  std::vector<std::int32_t> ids;  // token ids; unused with ingested embeddings
  std::optional<numerics::Tensor> cse;  // ingested [L x cse_dim]
  std::array<GraphInput, 3> graphs;     // indexed by GraphKind
  std::size_t length = 1;
  bool parsed = true;
  std::string parse_error;
};

// [L x n] pooling matrix of the configured scheme.
numerics::Tensor pooling_matrix(std::size_t length, std::size_t nodes, GraphPooling pooling);

// Builds features from raw parts. `adjacency[k]` may be null for a graph
// that is absent. L is the token count (or CSE rows), at least 1.
SampleFeatures features_from_parts(std::vector<std::int32_t> ids, std::optional<numerics::Tensor> cse,
                                   const std::array<const codegraph::AdjacencyMatrix*, 3>& adjacency,
                                   const FusionConfig& fusion);

// Parses, builds enabled graphs and tokenizes. Parse failures leave the
// graph inputs empty (zero structural features) and set `parsed` false.
// With an ingested embedder the unit's embedding_path is read.
SampleFeatures extract_features(const codegraph::SourceUnit& unit, const embedding::Vocabulary& vocab,
                                const FusionConfig& fusion, codegraph::TruncationCounter* counter = nullptr);

}  // namespace vulnformer::model
