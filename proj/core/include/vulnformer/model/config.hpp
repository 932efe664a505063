#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnformer/codegraph/graph.hpp"
#include "vulnformer/embedding/embedder.hpp"
#include "vulnformer/numerics/layers.hpp"

namespace vulnformer::model {

struct ConformerConfig {
  std::size_t num_blocks = 4;
  std::size_t num_heads = 4;
  std::size_t model_dim = 64;
  std::size_t ffn_dim = 128;
  std::size_t conv_kernel = 7;
  numerics::AttentionScaling attention_scaling = numerics::AttentionScaling::kPlusOne;
  numerics::PositionMode position_mode = numerics::PositionMode::kMultiplicative;
  double dropout = 0.0;
  // false: each block is LayerNorm(x + FFN(x)) instead of a Conformer block
  bool conformer_blocks = true;

  void validate() const;  // kInvalidConfig
};

// How a graph's n node features are brought to the token length L.
enum class GraphPooling {
  kAdaptiveMean,  // output row t averages node rows [floor(t*n/L), ceil((t+1)*n/L))
  kZeroPad,       // first min(n, L) node rows, zero rows after
};

struct FusionConfig {
  bool use_ast = true;
  bool use_cfg = true;
  bool use_dfg = true;
  bool use_cse = true;
  std::size_t max_nodes = 128;
  std::size_t node_dim = 16;    // width of each S_g block
  std::size_t max_length = 128;  // token cap, at most 768
  std::size_t cse_dim = 64;
  embedding::EmbedderKind embedder = embedding::EmbedderKind::kInternal;
  bool freeze_embeddings = false;  // internal table only; ingested inputs are never trained
  GraphPooling pooling = GraphPooling::kAdaptiveMean;

  bool uses(codegraph::GraphKind kind) const;
  std::size_t graph_count() const { return std::size_t(use_ast) + use_cfg + use_dfg; }
  // Width of [CSE | S_AST | S_CFG | S_DFG] before projection.
  std::size_t input_width() const { return (use_cse ? cse_dim : 0) + graph_count() * node_dim; }
  void validate() const;  // kInvalidConfig, kOddDimension
};

struct ModelConfig {
  ConformerConfig conformer;
  FusionConfig fusion;
  std::size_t vocab_size = 2;

  void validate() const;
};

// One row of the ablation table: baseline or a single disabled component.
enum class AblationAxis {
  kBaseline,
  kWithoutAst,
  kWithoutDfg,
  kWithoutCfg,
  kWithoutConformer,
  kWithoutAttentionModified,
  kWithoutLlm,
};

std::string_view ablation_name(AblationAxis axis);    // "baseline", "w/o-ast", ...
AblationAxis parse_ablation(std::string_view name);    // kInvalidConfig
const std::vector<AblationAxis>& all_ablation_axes();
ModelConfig apply_ablation(ModelConfig config, AblationAxis axis);

std::string_view pooling_name(GraphPooling pooling);
GraphPooling parse_pooling(std::string_view name);

nlohmann::json to_json(const ModelConfig& config);
// Missing keys keep their defaults; bad values throw kInvalidConfig.
ModelConfig model_config_from_json(const nlohmann::json& value);

}  // namespace vulnformer::model
