#include "vulnformer/embedding/embedder.hpp"

#include "vulnformer/io/container.hpp"
#include "vulnformer/numerics/ops.hpp"

namespace vulnformer::embedding {

std::string_view embedder_kind_name(EmbedderKind kind) {
  switch (kind) {
    case EmbedderKind::kInternal: return "internal";
    case EmbedderKind::kOneHot: return "one_hot";
    case EmbedderKind::kIngested: return "ingested";
  }
  return "internal";
}

EmbedderKind parse_embedder_kind(std::string_view name) {
  if (name == "internal") return EmbedderKind::kInternal;
  if (name == "one_hot") return EmbedderKind::kOneHot;
  if (name == "ingested") return EmbedderKind::kIngested;
  throw Error(ErrorKind::kInvalidConfig, "unknown embedder '" + std::string(name) + "'");
}

EmbeddingMatrix embed(const TokenSequence& seq, const numerics::Tensor& table) {
  return {numerics::embedding_lookup(table, std::span<const std::int32_t>(seq.ids), kPadId), EmbeddingSource::kInternal};
}

numerics::Tensor one_hot_table(std::size_t vocab_size, std::size_t dim) {
  auto table = numerics::Tensor::zeros({vocab_size, dim});
  auto values = table.mutable_values();
  for (std::size_t k = 1; k < vocab_size && dim > 0; ++k) values[k * dim + k % dim] = 1.0f;
  return table;
}

EmbeddingMatrix ingest_embeddings(const std::filesystem::path& path, std::size_t expected_dim, std::size_t max_rows) {
  io::MatrixContainer container = io::MatrixContainer::load(path);
  if (container.size() == 0) throw Error(ErrorKind::kFormat, path.string() + ": container is empty");
  const io::ContainerEntry& entry = container.entries().front();
  if (entry.shape.size() != 2) {
    throw Error(ErrorKind::kShape, path.string() + ": expected a 2-D matrix, got " + numerics::shape_string(entry.shape));
  }
  if (entry.shape[0] > max_rows) {
    throw Error(ErrorKind::kShape, path.string() + ": " + std::to_string(entry.shape[0]) + " rows exceed the limit of " +
                                       std::to_string(max_rows));
  }
  if (expected_dim > 0 && entry.shape[1] != expected_dim) {
    throw Error(ErrorKind::kShape, path.string() + ": width " + std::to_string(entry.shape[1]) + ", expected " +
                                       std::to_string(expected_dim));
  }
  return {entry.to_tensor(), EmbeddingSource::kIngested};
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix) {
  io::MatrixContainer container;
  container.add("cse", matrix.values);
  container.save(path);
}

}  // namespace vulnformer::embedding
