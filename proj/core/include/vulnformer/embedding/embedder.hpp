#pragma once

#include <filesystem>
#include <string_view>

#include "vulnformer/embedding/vocabulary.hpp"
#include "vulnformer/numerics/tensor.hpp"

namespace vulnformer::embedding {

enum class EmbedderKind {
  kInternal,  // trainable id -> vector table
  kOneHot,    // fixed table, row k = e_(k mod d)
  kIngested,  // precomputed matrices read from containers
};

std::string_view embedder_kind_name(EmbedderKind kind);
EmbedderKind parse_embedder_kind(std::string_view name);  // kInvalidConfig

enum class EmbeddingSource { kInternal, kIngested };

struct EmbeddingMatrix {
  numerics::Tensor values;  // [L x d]
  EmbeddingSource source = EmbeddingSource::kInternal;

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }
};

// Row t = table[ids[t]], PAD rows zero; differentiable w.r.t. the table.
// Throws kIndexOutOfVocabulary for ids outside the table.
EmbeddingMatrix embed(const TokenSequence& seq, const numerics::Tensor& table);

// [vocab x dim] with PAD row zero and row k = e_(k mod dim) otherwise.
numerics::Tensor one_hot_table(std::size_t vocab_size, std::size_t dim);

// Reads the first entry of a container as an L x d matrix. Throws kShape for
// non-2-D payloads, more than `max_rows` rows, or (when expected_dim > 0) a
// width other than expected_dim; kFormat/kIo from the container reader.
EmbeddingMatrix ingest_embeddings(const std::filesystem::path& path, std::size_t expected_dim = 0,
                                  std::size_t max_rows = kMaxSequenceLength);
void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix);

}  // namespace vulnformer::embedding
