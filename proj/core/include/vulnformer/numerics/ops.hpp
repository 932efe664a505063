#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "vulnformer/numerics/tensor.hpp"

namespace vulnformer::numerics {

// Row offsets of the samples packed into one matrix: {0, L0, L0+L1, ..., total}.
using RowSegments = std::vector<std::size_t>;

RowSegments single_segment(std::size_t rows);
// Throws kShapeMismatch unless segments are non-decreasing from 0 to `rows`.
void check_segments(std::span<const std::size_t> segments, std::size_t rows);

// All matrix ops take rank-2 tensors; bias-like operands are rank 1.

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> transpose(const BasicTensor<T>& a);

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);
// a[m x n] + bias[n] broadcast over rows.
template <typename T>
BasicTensor<T> add_bias(const BasicTensor<T>& a, const BasicTensor<T>& bias);
template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T factor);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& a);
template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& a);

// Row-wise softmax with max subtraction.
template <typename T>
BasicTensor<T> softmax_rows(const BasicTensor<T>& a);
// exp(x_i) / (1 + sum_j exp(x_j)); rows may sum to less than one.
template <typename T>
BasicTensor<T> softmax_one_rows(const BasicTensor<T>& a);

// Per-row normalization, biased variance.
template <typename T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gamma, const BasicTensor<T>& beta,
                          T eps = T(1e-5));

struct BatchNormState {
  bool training = false;
  double momentum = 0.1;
  double eps = 1e-5;
};

// Per-column normalization over all rows. In training mode batch statistics
// are used and the running buffers updated in place (unbiased variance);
// otherwise the running buffers are used.
template <typename T>
BasicTensor<T> batch_norm(const BasicTensor<T>& x, const BasicTensor<T>& gamma, const BasicTensor<T>& beta,
                          BasicTensor<T>& running_mean, BasicTensor<T>& running_var, const BatchNormState& state);

// [L x C] -> [L x k*C]; row t holds x[t + j - k/2] in block j, zero outside
// the row's own segment. `kernel` must be odd.
template <typename T>
BasicTensor<T> im2col(const BasicTensor<T>& x, std::size_t kernel, std::span<const std::size_t> segments);

template <typename T>
BasicTensor<T> concat_cols(std::span<const BasicTensor<T>> parts);
template <typename T>
BasicTensor<T> concat_rows(std::span<const BasicTensor<T>> parts);
template <typename T>
BasicTensor<T> slice_cols(const BasicTensor<T>& a, std::size_t begin, std::size_t end);
template <typename T>
BasicTensor<T> slice_rows(const BasicTensor<T>& a, std::size_t begin, std::size_t end);

// [L x d] -> [segments-1 x d], mean over each segment's rows.
template <typename T>
BasicTensor<T> mean_pool_segments(const BasicTensor<T>& x, std::span<const std::size_t> segments);

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a);
template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& a);

// Rows of `table` for each id. Ids equal to `pad_id` give a zero row that
// receives no gradient. Throws kIndexOutOfVocabulary for ids >= table rows.
template <typename T>
BasicTensor<T> embedding_lookup(const BasicTensor<T>& table, std::span<const std::int32_t> ids,
                                std::int32_t pad_id = 0);

// Inverted dropout; identity when p == 0.
template <typename T>
BasicTensor<T> dropout(const BasicTensor<T>& a, double p, std::mt19937_64& rng);

// Mean binary cross-entropy of logits [B x 1] (or [B]) against 0/1 targets.
template <typename T>
BasicTensor<T> bce_with_logits(const BasicTensor<T>& logits, std::span<const T> targets);

}  // namespace vulnformer::numerics
