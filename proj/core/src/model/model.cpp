#include "vulnformer/model/model.hpp"

#include <algorithm>
#include <cmath>

#include "vulnformer/embedding/embedder.hpp"
#include "vulnformer/numerics/ops.hpp"

namespace vulnformer::model {

namespace nx = numerics;
using codegraph::GraphKind;

namespace {

// Xavier fan sizes by parameter name. Conv weights are [k*d_in x d_out] and
// count the kernel on both sides.
std::pair<double, double> fans(const std::string& name, const nx::Shape& shape, std::size_t kernel) {
  double fan_in = static_cast<double>(shape[0]);
  double fan_out = static_cast<double>(shape[1]);
  if (name.ends_with("conv.weight")) fan_out *= static_cast<double>(kernel);
  return {fan_in, fan_out};
}

bool is_one_init(const std::string& name) { return name.ends_with("gamma"); }

}  // namespace

Tensor ParameterStore::add_parameter(std::string name, nx::Shape shape, bool trainable) {
  if (find(name) != nullptr) throw Error(ErrorKind::kInvalidConfig, "duplicate parameter '" + name + "'");
  Tensor t = Tensor::zeros(std::move(shape), trainable);
  parameters_.push_back({std::move(name), t, trainable});
  return t;
}

Tensor ParameterStore::add_buffer(std::string name, nx::Shape shape, float fill) {
  if (find(name) != nullptr) throw Error(ErrorKind::kInvalidConfig, "duplicate buffer '" + name + "'");
  Tensor t = Tensor::full(std::move(shape), fill);
  buffers_.push_back({std::move(name), t, false});
  return t;
}

const ParameterStore::Entry* ParameterStore::find(std::string_view name) const {
  for (const auto* list : {&parameters_, &buffers_})
    for (const auto& e : *list)
      if (e.name == name) return &e;
  return nullptr;
}

Tensor ParameterStore::get(std::string_view name) const {
  if (const Entry* e = find(name)) return e->tensor;
  throw Error(ErrorKind::kInvalidConfig, "no parameter named '" + std::string(name) + "'");
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : parameters_) n += e.tensor.size();
  return n;
}

std::vector<Tensor> ParameterStore::trainable() const {
  std::vector<Tensor> out;
  for (const auto& e : parameters_)
    if (e.trainable) out.push_back(e.tensor);
  return out;
}

void ParameterStore::zero_grad() {
  for (auto& e : parameters_) e.tensor.zero_grad();
}

ConformerModel::ConformerModel(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  build();
}

ConformerModel ConformerModel::create(ModelConfig config, std::uint64_t seed) {
  ConformerModel model(std::move(config));
  model.initialize(seed);
  return model;
}

void ConformerModel::build() {
  const auto& c = config_.conformer;
  const auto& f = config_.fusion;
  const std::size_t d = c.model_dim, ff = c.ffn_dim, k = c.conv_kernel;

  if (f.use_cse) {
    if (f.embedder == embedding::EmbedderKind::kInternal) {
      embed_table_ = store_.add_parameter("embed.table", {config_.vocab_size, f.cse_dim}, !f.freeze_embeddings);
    } else if (f.embedder == embedding::EmbedderKind::kOneHot) {
      embed_table_ = embedding::one_hot_table(config_.vocab_size, f.cse_dim);
    }
  }
  for (std::size_t g = 0; g < 3; ++g) {
    auto kind = static_cast<GraphKind>(g);
    if (!f.uses(kind)) continue;
    std::string name = "graph." + std::string(codegraph::graph_kind_name(kind)) + ".nodes";
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::tolower(ch); });
    graph_tables_[g] = store_.add_parameter(name, {f.max_nodes, f.node_dim});
  }
  input_weight_ = store_.add_parameter("input.weight", {f.input_width(), d});
  input_bias_ = store_.add_parameter("input.bias", {d});

  auto make_ffn = [&](const std::string& prefix) {
    nx::FfnParams<float> p;
    p.w1 = store_.add_parameter(prefix + ".w1", {d, ff});
    p.b1 = store_.add_parameter(prefix + ".b1", {ff});
    p.w2 = store_.add_parameter(prefix + ".w2", {ff, d});
    p.b2 = store_.add_parameter(prefix + ".b2", {d});
    return p;
  };
  for (std::size_t i = 0; i < c.num_blocks; ++i) {
    const std::string b = "block" + std::to_string(i);
    BlockParams block;
    if (c.conformer_blocks) {
      block.ffn1 = make_ffn(b + ".ffn1");
      block.attn.wq = store_.add_parameter(b + ".attn.wq", {d, d});
      block.attn.wk = store_.add_parameter(b + ".attn.wk", {d, d});
      block.attn.wv = store_.add_parameter(b + ".attn.wv", {d, d});
      block.attn.wo = store_.add_parameter(b + ".attn.wo", {d, d});
      block.conv.kernel = k;
      block.conv.weight = store_.add_parameter(b + ".conv.weight", {k * d, d});
      block.conv.bias = store_.add_parameter(b + ".conv.bias", {d});
      block.conv.bn_gamma = store_.add_parameter(b + ".conv.bn_gamma", {d});
      block.conv.bn_beta = store_.add_parameter(b + ".conv.bn_beta", {d});
      block.conv.bn_running_mean = store_.add_buffer(b + ".conv.bn_running_mean", {d}, 0.0f);
      block.conv.bn_running_var = store_.add_buffer(b + ".conv.bn_running_var", {d}, 1.0f);
      block.ffn2 = make_ffn(b + ".ffn2");
    } else {
      block.ffn1 = make_ffn(b + ".ffn");
    }
    block.norm_gamma = store_.add_parameter(b + ".norm.gamma", {d});
    block.norm_beta = store_.add_parameter(b + ".norm.beta", {d});
    blocks_.push_back(std::move(block));
  }
  head_w1_ = store_.add_parameter("head.w1", {d, d / 2});
  head_b1_ = store_.add_parameter("head.b1", {d / 2});
  head_w2_ = store_.add_parameter("head.w2", {d / 2, 1});
  head_b2_ = store_.add_parameter("head.b2", {1});
}

void ConformerModel::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (const auto& e : store_.parameters()) {
    Tensor t = e.tensor;
    auto values = t.mutable_values();
    if (t.rank() == 2) {
      auto [fan_in, fan_out] = fans(e.name, t.shape(), config_.conformer.conv_kernel);
      float limit = static_cast<float>(std::sqrt(6.0 / (fan_in + fan_out)));
      std::uniform_real_distribution<float> dist(-limit, limit);
      for (float& v : values) v = dist(rng);
    } else {
      std::fill(values.begin(), values.end(), is_one_init(e.name) ? 1.0f : 0.0f);
    }
  }
  for (const auto& e : store_.buffers()) {
    Tensor t = e.tensor;
    auto values = t.mutable_values();
    std::fill(values.begin(), values.end(), e.name.ends_with("running_var") ? 1.0f : 0.0f);
  }
}

ConformerModel ConformerModel::clone() const {
  ConformerModel copy(config_);
  copy.copy_values_from(*this);
  return copy;
}

void ConformerModel::copy_values_from(const ConformerModel& other) {
  auto copy_list = [](const std::vector<ParameterStore::Entry>& dst, const std::vector<ParameterStore::Entry>& src) {
    if (dst.size() != src.size()) throw Error(ErrorKind::kShapeMismatch, "models have different parameter sets");
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (dst[i].name != src[i].name || dst[i].tensor.shape() != src[i].tensor.shape()) {
        throw Error(ErrorKind::kShapeMismatch, "parameter '" + dst[i].name + "' differs between models");
      }
      Tensor t = dst[i].tensor;
      std::copy(src[i].tensor.values().begin(), src[i].tensor.values().end(), t.mutable_values().begin());
    }
  };
  copy_list(store_.parameters(), other.store_.parameters());
  copy_list(store_.buffers(), other.store_.buffers());
}

Tensor ConformerModel::encode_input(std::span<const SampleFeatures* const> batch, nx::RowSegments& segments) const {
  if (batch.empty()) throw Error(ErrorKind::kEmptyInput, "encode_input on an empty batch");
  const auto& f = config_.fusion;
  segments.assign(1, 0);
  for (const SampleFeatures* s : batch) segments.push_back(segments.back() + s->length);

  std::vector<Tensor> blocks;
  if (f.use_cse) {
    if (f.embedder == embedding::EmbedderKind::kIngested) {
      std::vector<Tensor> rows;
      for (const SampleFeatures* s : batch) {
        if (!s->cse) throw Error(ErrorKind::kEmptyInput, "ingested embedder needs precomputed embeddings");
        rows.push_back(*s->cse);
      }
      blocks.push_back(rows.size() == 1 ? rows[0] : nx::concat_rows<float>(rows));
    } else {
      std::vector<std::int32_t> ids;
      for (const SampleFeatures* s : batch) {
        if (s->ids.size() != s->length) throw Error(ErrorKind::kShapeMismatch, "token ids do not match sample length");
        ids.insert(ids.end(), s->ids.begin(), s->ids.end());
      }
      blocks.push_back(nx::embedding_lookup(embed_table_, std::span<const std::int32_t>(ids), embedding::kPadId));
    }
  }
  for (std::size_t g = 0; g < 3; ++g) {
    if (!f.uses(static_cast<GraphKind>(g))) continue;
    std::vector<Tensor> rows;
    for (const SampleFeatures* s : batch) {
      const GraphInput& in = s->graphs[g];
      if (in.nodes > f.max_nodes || in.mix.rows() != s->length || in.mix.cols() != in.nodes) {
        throw Error(ErrorKind::kShapeMismatch, "graph input " + nx::shape_string(in.mix.shape()) + " for length " +
                                                   std::to_string(s->length) + " and max_nodes " +
                                                   std::to_string(f.max_nodes));
      }
      rows.push_back(nx::matmul(in.mix, nx::slice_rows(graph_tables_[g], 0, in.nodes)));
    }
    blocks.push_back(rows.size() == 1 ? rows[0] : nx::concat_rows<float>(rows));
  }
  Tensor fused = blocks.size() == 1 ? blocks[0] : nx::concat_cols<float>(blocks);
  Tensor positioned = nx::apply_positions(fused, std::span<const std::size_t>(segments), config_.conformer.position_mode);
  return nx::dense(positioned, input_weight_, input_bias_);
}

Tensor ConformerModel::conformer_block(const Tensor& x, std::size_t index, std::span<const std::size_t> segments,
                                       const nx::ForwardContext& ctx) {
  BlockParams& p = blocks_.at(index);
  const auto& c = config_.conformer;
  if (!c.conformer_blocks) return nx::ffn_block(x, p, ctx);
  return nx::conformer_block(x, p, nx::AttentionConfig{c.num_heads, c.model_dim, c.attention_scaling}, segments, ctx);
}

Tensor ConformerModel::forward_logits(std::span<const SampleFeatures* const> batch, const nx::ForwardContext& ctx) {
  nx::RowSegments segments;
  Tensor h = encode_input(batch, segments);
  for (std::size_t i = 0; i < blocks_.size(); ++i) h = conformer_block(h, i, segments, ctx);
  Tensor pooled = nx::mean_pool_segments(h, std::span<const std::size_t>(segments));
  Tensor hidden = nx::relu(nx::dense(pooled, head_w1_, head_b1_));
  return nx::dense(hidden, head_w2_, head_b2_);
}

std::vector<double> ConformerModel::predict(std::span<const SampleFeatures* const> batch) {
  nx::NoGradGuard no_grad;
  Tensor probs = nx::sigmoid(forward_logits(batch, nx::ForwardContext{}));
  return {probs.values().begin(), probs.values().end()};
}

double ConformerModel::predict_one(const SampleFeatures& sample) {
  const SampleFeatures* one[] = {&sample};
  return predict(one).front();
}

}  // namespace vulnformer::model
