#pragma once

#include <random>
#include <string_view>

#include "vulnformer/numerics/ops.hpp"

namespace vulnformer::numerics {

enum class AttentionScaling {
  kStandard,    // QK^T / sqrt(d_k)
  kPlusOne,     // QK^T / (1 + sqrt(d_k))
  kSoftmaxOne,  // sqrt(d_k) scaling, normalizer 1 + sum(exp)
};

enum class PositionMode { kMultiplicative, kAdditive };

std::string_view scaling_name(AttentionScaling scaling);
AttentionScaling parse_scaling(std::string_view name);  // kInvalidConfig on unknown
std::string_view position_mode_name(PositionMode mode);
PositionMode parse_position_mode(std::string_view name);

// Multiplier applied to QK^T.
double score_scale(AttentionScaling scaling, std::size_t head_dim);

struct AttentionConfig {
  std::size_t num_heads = 4;
  std::size_t model_dim = 64;
  AttentionScaling scaling = AttentionScaling::kPlusOne;

  std::size_t head_dim() const { return num_heads == 0 ? 0 : model_dim / num_heads; }
  void validate() const;  // kInvalidConfig
};

// Per-call state: train/eval switch, dropout rate and its generator.
struct ForwardContext {
  bool training = false;
  double dropout = 0.0;
  std::mt19937_64* rng = nullptr;
};

template <typename T>
BasicTensor<T> maybe_dropout(const BasicTensor<T>& x, const ForwardContext& ctx);

// [L x d] table. Pair i covers columns (2i, 2i+1) at frequency
// pos / 10000^(2i/d): even i holds (sin, cos), odd i holds (cos, sin).
// Throws kOddDimension for odd d.
template <typename T>
BasicTensor<T> sinusoidal_positions(std::size_t length, std::size_t dim);

// Combines x with the position table, restarting at 0 for every segment.
template <typename T>
BasicTensor<T> apply_positions(const BasicTensor<T>& x, std::span<const std::size_t> segments,
                               PositionMode mode = PositionMode::kMultiplicative);
template <typename T>
BasicTensor<T> apply_positions(const BasicTensor<T>& x, PositionMode mode = PositionMode::kMultiplicative);

// Single-head scaled dot-product attention over one sequence.
template <typename T>
BasicTensor<T> attention(const BasicTensor<T>& q, const BasicTensor<T>& k, const BasicTensor<T>& v,
                         AttentionScaling scaling, const ForwardContext& ctx = {});

template <typename T>
struct AttentionParams {
  // d x d each; head h uses columns [h*d_k, (h+1)*d_k) of wq/wk/wv and the
  // matching rows of wo.
  BasicTensor<T> wq, wk, wv, wo;
};

// Attention is computed independently inside each segment.
template <typename T>
BasicTensor<T> multi_head_attention(const BasicTensor<T>& x, const AttentionParams<T>& params,
                                    const AttentionConfig& cfg, std::span<const std::size_t> segments,
                                    const ForwardContext& ctx = {});

template <typename T>
struct ConvParams {
  BasicTensor<T> weight;  // [k*d x d], block j multiplies x[t + j - k/2]
  BasicTensor<T> bias;    // [d]
  BasicTensor<T> bn_gamma, bn_beta;
  BasicTensor<T> bn_running_mean, bn_running_var;
  std::size_t kernel = 7;
  double bn_momentum = 0.1;
};

// Same-padded conv1d along the rows (no mixing across segments).
template <typename T>
BasicTensor<T> conv1d(const BasicTensor<T>& x, const BasicTensor<T>& weight, const BasicTensor<T>& bias,
                      std::size_t kernel, std::span<const std::size_t> segments);

// ReLU(BatchNorm(conv1d(x) + b)).
template <typename T>
BasicTensor<T> conv_module(const BasicTensor<T>& x, ConvParams<T>& params, std::span<const std::size_t> segments,
                           const ForwardContext& ctx = {});

template <typename T>
struct FfnParams {
  BasicTensor<T> w1, b1;  // [d x f], [f]
  BasicTensor<T> w2, b2;  // [f x d], [d]
};

// ReLU(W2 ReLU(W1 x + b1) + b2).
template <typename T>
BasicTensor<T> ffn(const BasicTensor<T>& x, const FfnParams<T>& params, const ForwardContext& ctx = {});

template <typename T>
struct ConformerBlockParams {
  FfnParams<T> ffn1, ffn2;  // ffn2 unused by the FFN-only block
  AttentionParams<T> attn;
  ConvParams<T> conv;
  BasicTensor<T> norm_gamma, norm_beta;
};

// Macaron block:
//   x1 = x + FFN1(x)/2, x2 = x1 + MHA(x1), x3 = x2 + Conv(x2),
//   y = LayerNorm(x3 + FFN2(x3)/2)
template <typename T>
BasicTensor<T> conformer_block(const BasicTensor<T>& x, ConformerBlockParams<T>& params, const AttentionConfig& cfg,
                               std::span<const std::size_t> segments, const ForwardContext& ctx = {});

// LayerNorm(x + FFN1(x)), the stand-in when Conformer blocks are ablated.
template <typename T>
BasicTensor<T> ffn_block(const BasicTensor<T>& x, const ConformerBlockParams<T>& params, const ForwardContext& ctx = {});

// x W + b.
template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& x, const BasicTensor<T>& weight, const BasicTensor<T>& bias);

}  // namespace vulnformer::numerics
