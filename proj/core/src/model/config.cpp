#include "vulnformer/model/config.hpp"

namespace vulnformer::model {

namespace {

[[noreturn]] void invalid(const std::string& message) { throw Error(ErrorKind::kInvalidConfig, message); }

template <typename V>
void read(const nlohmann::json& obj, const char* key, V& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<V>();
  } catch (const nlohmann::json::exception&) {
    invalid(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

void ConformerConfig::validate() const {
  if (num_blocks < 1) invalid("num_blocks must be at least 1");
  if (num_heads == 0 || model_dim % num_heads != 0) {
    invalid("model_dim " + std::to_string(model_dim) + " is not divisible by num_heads " + std::to_string(num_heads));
  }
  if (conv_kernel % 2 == 0) invalid("conv_kernel must be odd, got " + std::to_string(conv_kernel));
  if (ffn_dim == 0) invalid("ffn_dim must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) invalid("dropout must lie in [0, 1)");
}

bool FusionConfig::uses(codegraph::GraphKind kind) const {
  switch (kind) {
    case codegraph::GraphKind::kAst: return use_ast;
    case codegraph::GraphKind::kCfg: return use_cfg;
    case codegraph::GraphKind::kDfg: return use_dfg;
  }
  return false;
}

void FusionConfig::validate() const {
  if (!use_cse && graph_count() == 0) invalid("fusion needs the code embedding or at least one graph");
  if (max_nodes < 1) invalid("max_nodes must be at least 1");
  if (max_length < 1 || max_length > embedding::kMaxSequenceLength) {
    invalid("max_length must lie in [1, " + std::to_string(embedding::kMaxSequenceLength) + "]");
  }
  if (graph_count() > 0 && node_dim == 0) invalid("node_dim must be positive");
  if (use_cse && cse_dim == 0) invalid("cse_dim must be positive");
  if (input_width() % 2 != 0) {
    throw Error(ErrorKind::kOddDimension, "fused input width " + std::to_string(input_width()) +
                                              " must be even for the position table");
  }
}

void ModelConfig::validate() const {
  conformer.validate();
  fusion.validate();
  if (fusion.use_cse && fusion.embedder != embedding::EmbedderKind::kIngested && vocab_size < 2) {
    invalid("vocab_size must include <pad> and <unk>");
  }
}

std::string_view ablation_name(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::kBaseline: return "baseline";
    case AblationAxis::kWithoutAst: return "w/o-ast";
    case AblationAxis::kWithoutDfg: return "w/o-dfg";
    case AblationAxis::kWithoutCfg: return "w/o-cfg";
    case AblationAxis::kWithoutConformer: return "w/o-conformer";
    case AblationAxis::kWithoutAttentionModified: return "w/o-attention-modified";
    case AblationAxis::kWithoutLlm: return "w/o-llm";
  }
  return "baseline";
}

const std::vector<AblationAxis>& all_ablation_axes() {
  static const std::vector<AblationAxis> axes = {
      AblationAxis::kBaseline,         AblationAxis::kWithoutAst,
      AblationAxis::kWithoutDfg,       AblationAxis::kWithoutCfg,
      AblationAxis::kWithoutConformer, AblationAxis::kWithoutAttentionModified,
      AblationAxis::kWithoutLlm,
  };
  return axes;
}

AblationAxis parse_ablation(std::string_view name) {
  for (AblationAxis axis : all_ablation_axes())
    if (ablation_name(axis) == name) return axis;
  invalid("unknown ablation axis '" + std::string(name) + "'");
}

ModelConfig apply_ablation(ModelConfig config, AblationAxis axis) {
  switch (axis) {
    case AblationAxis::kBaseline: break;
    case AblationAxis::kWithoutAst: config.fusion.use_ast = false; break;
    case AblationAxis::kWithoutDfg: config.fusion.use_dfg = false; break;
    case AblationAxis::kWithoutCfg: config.fusion.use_cfg = false; break;
    case AblationAxis::kWithoutConformer: config.conformer.conformer_blocks = false; break;
    case AblationAxis::kWithoutAttentionModified:
      config.conformer.attention_scaling = numerics::AttentionScaling::kStandard;
      break;
    case AblationAxis::kWithoutLlm: config.fusion.embedder = embedding::EmbedderKind::kOneHot; break;
  }
  return config;
}

std::string_view pooling_name(GraphPooling pooling) {
  return pooling == GraphPooling::kZeroPad ? "zero_pad" : "adaptive_mean";
}

GraphPooling parse_pooling(std::string_view name) {
  if (name == "adaptive_mean") return GraphPooling::kAdaptiveMean;
  if (name == "zero_pad") return GraphPooling::kZeroPad;
  invalid("unknown graph pooling '" + std::string(name) + "'");
}

nlohmann::json to_json(const ModelConfig& config) {
  const auto& c = config.conformer;
  const auto& f = config.fusion;
  return {
      {"conformer",
       {{"num_blocks", c.num_blocks},
        {"num_heads", c.num_heads},
        {"model_dim", c.model_dim},
        {"ffn_dim", c.ffn_dim},
        {"conv_kernel", c.conv_kernel},
        {"attention_scaling", numerics::scaling_name(c.attention_scaling)},
        {"position_mode", numerics::position_mode_name(c.position_mode)},
        {"dropout", c.dropout},
        {"block_type", c.conformer_blocks ? "conformer" : "ffn_stack"}}},
      {"fusion",
       {{"use_ast", f.use_ast},
        {"use_cfg", f.use_cfg},
        {"use_dfg", f.use_dfg},
        {"use_cse", f.use_cse},
        {"max_nodes", f.max_nodes},
        {"node_dim", f.node_dim},
        {"max_length", f.max_length},
        {"cse_dim", f.cse_dim},
        {"embedder", embedding::embedder_kind_name(f.embedder)},
        {"freeze_embeddings", f.freeze_embeddings},
        {"pooling", pooling_name(f.pooling)}}},
      {"vocab_size", config.vocab_size},
  };
}

ModelConfig model_config_from_json(const nlohmann::json& value) {
  if (!value.is_object()) invalid("model config must be a JSON object");
  ModelConfig config;
  read(value, "vocab_size", config.vocab_size);
  if (value.contains("conformer")) {
    const auto& j = value.at("conformer");
    auto& c = config.conformer;
    read(j, "num_blocks", c.num_blocks);
    read(j, "num_heads", c.num_heads);
    read(j, "model_dim", c.model_dim);
    read(j, "ffn_dim", c.ffn_dim);
    read(j, "conv_kernel", c.conv_kernel);
    read(j, "dropout", c.dropout);
    std::string text;
    if (j.contains("attention_scaling")) {
      read(j, "attention_scaling", text);
      c.attention_scaling = numerics::parse_scaling(text);
    }
    if (j.contains("position_mode")) {
      read(j, "position_mode", text);
      c.position_mode = numerics::parse_position_mode(text);
    }
    if (j.contains("block_type")) {
      read(j, "block_type", text);
      if (text != "conformer" && text != "ffn_stack") invalid("unknown block_type '" + text + "'");
      c.conformer_blocks = text == "conformer";
    }
  }
  if (value.contains("fusion")) {
    const auto& j = value.at("fusion");
    auto& f = config.fusion;
    read(j, "use_ast", f.use_ast);
    read(j, "use_cfg", f.use_cfg);
    read(j, "use_dfg", f.use_dfg);
    read(j, "use_cse", f.use_cse);
    read(j, "max_nodes", f.max_nodes);
    read(j, "node_dim", f.node_dim);
    read(j, "max_length", f.max_length);
    read(j, "cse_dim", f.cse_dim);
    read(j, "freeze_embeddings", f.freeze_embeddings);
    std::string text;
    if (j.contains("embedder")) {
      read(j, "embedder", text);
      f.embedder = embedding::parse_embedder_kind(text);
    }
    if (j.contains("pooling")) {
      read(j, "pooling", text);
      f.pooling = parse_pooling(text);
    }
  }
  return config;
}

}  // namespace vulnformer::model
