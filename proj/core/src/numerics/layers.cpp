#include "vulnformer/numerics/layers.hpp"

#include <cmath>
#include <string>

namespace vulnformer::numerics {

std::string_view scaling_name(AttentionScaling scaling) {
  switch (scaling) {
    case AttentionScaling::kStandard: return "standard";
    case AttentionScaling::kPlusOne: return "plus_one";
    case AttentionScaling::kSoftmaxOne: return "softmax_one";
  }
  return "plus_one";
}

AttentionScaling parse_scaling(std::string_view name) {
  if (name == "standard") return AttentionScaling::kStandard;
  if (name == "plus_one") return AttentionScaling::kPlusOne;
  if (name == "softmax_one") return AttentionScaling::kSoftmaxOne;
  throw Error(ErrorKind::kInvalidConfig, "unknown attention scaling '" + std::string(name) + "'");
}

std::string_view position_mode_name(PositionMode mode) {
  return mode == PositionMode::kAdditive ? "additive" : "multiplicative";
}

PositionMode parse_position_mode(std::string_view name) {
  if (name == "multiplicative") return PositionMode::kMultiplicative;
  if (name == "additive") return PositionMode::kAdditive;
  throw Error(ErrorKind::kInvalidConfig, "unknown position mode '" + std::string(name) + "'");
}

double score_scale(AttentionScaling scaling, std::size_t head_dim) {
  double root = std::sqrt(static_cast<double>(head_dim));
  return scaling == AttentionScaling::kPlusOne ? 1.0 / (1.0 + root) : 1.0 / root;
}

void AttentionConfig::validate() const {
  if (num_heads == 0 || model_dim == 0 || model_dim % num_heads != 0) {
    throw Error(ErrorKind::kInvalidConfig, "model dim " + std::to_string(model_dim) + " not divisible into " +
                                               std::to_string(num_heads) + " heads");
  }
}

template <typename T>
BasicTensor<T> maybe_dropout(const BasicTensor<T>& x, const ForwardContext& ctx) {
  if (!ctx.training || ctx.dropout <= 0.0 || ctx.rng == nullptr) return x;
  return dropout(x, ctx.dropout, *ctx.rng);
}

template <typename T>
BasicTensor<T> sinusoidal_positions(std::size_t length, std::size_t dim) {
  if (dim % 2 != 0) throw Error(ErrorKind::kOddDimension, "position table needs an even width, got " + std::to_string(dim));
  std::vector<T> table(length * dim);
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t i = 0; i < dim / 2; ++i) {
      double angle = static_cast<double>(pos) / std::pow(10000.0, 2.0 * static_cast<double>(i) / static_cast<double>(dim));
      double s = std::sin(angle), c = std::cos(angle);
      bool swapped = i % 2 == 1;
      table[pos * dim + 2 * i] = T(swapped ? c : s);
      table[pos * dim + 2 * i + 1] = T(swapped ? s : c);
    }
  }
  return BasicTensor<T>::from_values({length, dim}, std::move(table));
}

template <typename T>
BasicTensor<T> apply_positions(const BasicTensor<T>& x, std::span<const std::size_t> segments, PositionMode mode) {
  if (x.rank() != 2) throw Error(ErrorKind::kShapeMismatch, "apply_positions: expected a matrix, got " + shape_string(x.shape()));
  check_segments(segments, x.rows());
  const std::size_t dim = x.cols();
  std::size_t longest = 0;
  for (std::size_t s = 0; s + 1 < segments.size(); ++s) longest = std::max(longest, segments[s + 1] - segments[s]);
  BasicTensor<T> table = sinusoidal_positions<T>(longest, dim);
  std::vector<T> tiled(x.size());
  for (std::size_t s = 0; s + 1 < segments.size(); ++s)
    for (std::size_t r = segments[s]; r < segments[s + 1]; ++r)
      std::copy_n(&table.values()[(r - segments[s]) * dim], dim, &tiled[r * dim]);
  auto pe = BasicTensor<T>::from_values(x.shape(), std::move(tiled));
  return mode == PositionMode::kAdditive ? add(x, pe) : mul(x, pe);
}

template <typename T>
BasicTensor<T> apply_positions(const BasicTensor<T>& x, PositionMode mode) {
  RowSegments all = single_segment(x.rank() == 2 ? x.rows() : 0);
  return apply_positions(x, std::span<const std::size_t>(all), mode);
}

template <typename T>
BasicTensor<T> attention(const BasicTensor<T>& q, const BasicTensor<T>& k, const BasicTensor<T>& v,
                         AttentionScaling scaling, const ForwardContext& ctx) {
  if (q.rank() != 2 || k.shape() != q.shape() || v.rank() != 2 || v.rows() != k.rows()) {
    throw Error(ErrorKind::kShapeMismatch,
                "attention: " + shape_string(q.shape()) + " vs " + shape_string(k.shape()) + " vs " + shape_string(v.shape()));
  }
  BasicTensor<T> scores = scale(matmul(q, transpose(k)), T(score_scale(scaling, q.cols())));
  BasicTensor<T> weights = scaling == AttentionScaling::kSoftmaxOne ? softmax_one_rows(scores) : softmax_rows(scores);
  return matmul(maybe_dropout(weights, ctx), v);
}

template <typename T>
BasicTensor<T> multi_head_attention(const BasicTensor<T>& x, const AttentionParams<T>& params,
                                    const AttentionConfig& cfg, std::span<const std::size_t> segments,
                                    const ForwardContext& ctx) {
  cfg.validate();
  if (x.rank() != 2 || x.cols() != cfg.model_dim) {
    throw Error(ErrorKind::kShapeMismatch, "multi_head_attention: input " + shape_string(x.shape()) +
                                               " vs model dim " + std::to_string(cfg.model_dim));
  }
  check_segments(segments, x.rows());
  BasicTensor<T> q = matmul(x, params.wq), k = matmul(x, params.wk), v = matmul(x, params.wv);
  const std::size_t dk = cfg.head_dim();
  std::vector<BasicTensor<T>> per_segment;
  for (std::size_t s = 0; s + 1 < segments.size(); ++s) {
    std::size_t lo = segments[s], hi = segments[s + 1];
    if (lo == hi) continue;
    BasicTensor<T> qs = slice_rows(q, lo, hi), ks = slice_rows(k, lo, hi), vs = slice_rows(v, lo, hi);
    std::vector<BasicTensor<T>> heads;
    for (std::size_t h = 0; h < cfg.num_heads; ++h) {
      std::size_t c0 = h * dk, c1 = c0 + dk;
      heads.push_back(attention(slice_cols(qs, c0, c1), slice_cols(ks, c0, c1), slice_cols(vs, c0, c1), cfg.scaling, ctx));
    }
    per_segment.push_back(heads.size() == 1 ? heads[0] : concat_cols<T>(heads));
  }
  BasicTensor<T> joined = per_segment.size() == 1 ? per_segment[0] : concat_rows<T>(per_segment);
  return matmul(joined, params.wo);
}

template <typename T>
BasicTensor<T> conv1d(const BasicTensor<T>& x, const BasicTensor<T>& weight, const BasicTensor<T>& bias,
                      std::size_t kernel, std::span<const std::size_t> segments) {
  if (weight.rank() != 2 || weight.rows() != kernel * x.cols()) {
    throw Error(ErrorKind::kShapeMismatch, "conv1d: input " + shape_string(x.shape()) + " vs weight " +
                                               shape_string(weight.shape()) + " (kernel " + std::to_string(kernel) + ")");
  }
  return add_bias(matmul(im2col(x, kernel, segments), weight), bias);
}

template <typename T>
BasicTensor<T> conv_module(const BasicTensor<T>& x, ConvParams<T>& params, std::span<const std::size_t> segments,
                           const ForwardContext& ctx) {
  BasicTensor<T> conv = conv1d(x, params.weight, params.bias, params.kernel, segments);
  BatchNormState state{ctx.training, params.bn_momentum, 1e-5};
  return relu(batch_norm(conv, params.bn_gamma, params.bn_beta, params.bn_running_mean, params.bn_running_var, state));
}

template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& x, const BasicTensor<T>& weight, const BasicTensor<T>& bias) {
  return add_bias(matmul(x, weight), bias);
}

template <typename T>
BasicTensor<T> ffn(const BasicTensor<T>& x, const FfnParams<T>& params, const ForwardContext& ctx) {
  BasicTensor<T> hidden = maybe_dropout(relu(dense(x, params.w1, params.b1)), ctx);
  return relu(dense(hidden, params.w2, params.b2));
}

template <typename T>
BasicTensor<T> conformer_block(const BasicTensor<T>& x, ConformerBlockParams<T>& p, const AttentionConfig& cfg,
                               std::span<const std::size_t> segments, const ForwardContext& ctx) {
  const T half(0.5);
  BasicTensor<T> x1 = add(x, scale(maybe_dropout(ffn(x, p.ffn1, ctx), ctx), half));
  BasicTensor<T> x2 = add(x1, maybe_dropout(multi_head_attention(x1, p.attn, cfg, segments, ctx), ctx));
  BasicTensor<T> x3 = add(x2, maybe_dropout(conv_module(x2, p.conv, segments, ctx), ctx));
  BasicTensor<T> x4 = add(x3, scale(maybe_dropout(ffn(x3, p.ffn2, ctx), ctx), half));
  return layer_norm(x4, p.norm_gamma, p.norm_beta);
}

template <typename T>
BasicTensor<T> ffn_block(const BasicTensor<T>& x, const ConformerBlockParams<T>& p, const ForwardContext& ctx) {
  return layer_norm(add(x, maybe_dropout(ffn(x, p.ffn1, ctx), ctx)), p.norm_gamma, p.norm_beta);
}

#define VULNFORMER_INSTANTIATE_LAYERS(T)                                                                          \
  template BasicTensor<T> maybe_dropout(const BasicTensor<T>&, const ForwardContext&);                            \
  template BasicTensor<T> sinusoidal_positions<T>(std::size_t, std::size_t);                                      \
  template BasicTensor<T> apply_positions(const BasicTensor<T>&, std::span<const std::size_t>, PositionMode);     \
  template BasicTensor<T> apply_positions(const BasicTensor<T>&, PositionMode);                                   \
  template BasicTensor<T> attention(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&,          \
                                    AttentionScaling, const ForwardContext&);                                     \
  template BasicTensor<T> multi_head_attention(const BasicTensor<T>&, const AttentionParams<T>&,                  \
                                               const AttentionConfig&, std::span<const std::size_t>,              \
                                               const ForwardContext&);                                            \
  template BasicTensor<T> conv1d(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, std::size_t, \
                                 std::span<const std::size_t>);                                                  \
  template BasicTensor<T> conv_module(const BasicTensor<T>&, ConvParams<T>&, std::span<const std::size_t>,        \
                                      const ForwardContext&);                                                     \
  template BasicTensor<T> dense(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&);             \
  template BasicTensor<T> ffn(const BasicTensor<T>&, const FfnParams<T>&, const ForwardContext&);              \
  template BasicTensor<T> conformer_block(const BasicTensor<T>&, ConformerBlockParams<T>&,                       \
                                          const AttentionConfig&, std::span<const std::size_t>,                  \
                                          const ForwardContext&);                                                 \
  template BasicTensor<T> ffn_block(const BasicTensor<T>&, const ConformerBlockParams<T>&, const ForwardContext&);

VULNFORMER_INSTANTIATE_LAYERS(float)
VULNFORMER_INSTANTIATE_LAYERS(double)

}  // namespace vulnformer::numerics
