#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vulnformer/model/config.hpp"
#include "vulnformer/model/features.hpp"
#include "vulnformer/numerics/layers.hpp"

namespace vulnformer::model {

using numerics::Tensor;

// Named tensors in creation order. Parameters are trained; buffers
// (BatchNorm running statistics) are state that is saved but not trained.
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
    bool trainable = true;
  };

  Tensor add_parameter(std::string name, numerics::Shape shape, bool trainable = true);
  Tensor add_buffer(std::string name, numerics::Shape shape, float fill);

  const std::vector<Entry>& parameters() const { return parameters_; }
  const std::vector<Entry>& buffers() const { return buffers_; }
  const Entry* find(std::string_view name) const;
  Tensor get(std::string_view name) const;  // kInvalidConfig when missing

  // Sum of parameter element counts (buffers excluded).
  std::size_t parameter_count() const;
  std::vector<Tensor> trainable() const;
  void zero_grad();

 private:
  std::vector<Entry> parameters_;
  std::vector<Entry> buffers_;
};

using BlockParams = numerics::ConformerBlockParams<float>;

class ConformerModel {
 public:
  // Parameters are allocated zero; call initialize() or load values.
  explicit ConformerModel(ModelConfig config);
  static ConformerModel create(ModelConfig config, std::uint64_t seed);

  ConformerModel(ConformerModel&&) noexcept = default;
  ConformerModel& operator=(ConformerModel&&) noexcept = default;
  ConformerModel(const ConformerModel&) = delete;
  ConformerModel& operator=(const ConformerModel&) = delete;

  // Xavier-uniform weights, zero biases, unit norm scales; draws in
  // parameter creation order from mt19937_64(seed).
  void initialize(std::uint64_t seed);
  // Deep copy with independent storage.
  ConformerModel clone() const;
  void copy_values_from(const ConformerModel& other);

  const ModelConfig& config() const { return config_; }
  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }
  std::size_t parameter_count() const { return store_.parameter_count(); }

  // Fused, position-encoded, projected input for a packed batch
  // [sum L x d]; `segments` receives the per-sample row offsets.
  Tensor encode_input(std::span<const SampleFeatures* const> batch, numerics::RowSegments& segments) const;
  Tensor conformer_block(const Tensor& x, std::size_t index, std::span<const std::size_t> segments,
                         const numerics::ForwardContext& ctx);
  // Logits [B x 1].
  Tensor forward_logits(std::span<const SampleFeatures* const> batch, const numerics::ForwardContext& ctx);
  // Sigmoid probabilities in eval mode without recording a graph.
  std::vector<double> predict(std::span<const SampleFeatures* const> batch);
  double predict_one(const SampleFeatures& sample);

 private:
  void build();

  ModelConfig config_;
  ParameterStore store_;
  Tensor embed_table_;  // internal (parameter) or one-hot (fixed); undefined when ingested
  std::array<Tensor, 3> graph_tables_;
  Tensor input_weight_, input_bias_;
  std::vector<BlockParams> blocks_;
  Tensor head_w1_, head_b1_, head_w2_, head_b2_;
};

}  // namespace vulnformer::model
