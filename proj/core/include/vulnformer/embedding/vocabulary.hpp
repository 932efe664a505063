#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnformer/codegraph/source_unit.hpp"
#include "vulnformer/embedding/tokenizer.hpp"

namespace vulnformer::embedding {

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kUnkId = 1;
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnkToken = "<unk>";

struct FitOptions {
  std::size_t min_count = 1;
  PreserveList preserve;
  // Add every declared function/variable name in the corpus to `preserve`.
  bool collect_declared_names = true;
};

class Vocabulary {
 public:
  Vocabulary();

  // Ids after PAD/UNK go by (frequency desc, token asc). Preserved names are
  // always included. Throws Error(kEmptyCorpus) for an empty corpus.
  static Vocabulary fit(std::span<const codegraph::SourceUnit> corpus, const FitOptions& options = {});

  std::size_t size() const { return tokens_.size(); }
  std::int32_t id(std::string_view token) const;  // kUnkId when absent
  const std::string& token(std::int32_t id) const;
  std::size_t frequency(std::int32_t id) const { return frequencies_.at(static_cast<std::size_t>(id)); }
  bool contains(std::string_view token) const { return index_.contains(std::string(token)); }

  const PreserveList& preserve_list() const { return preserve_; }
  std::size_t min_count() const { return min_count_; }

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& value);  // kFormat
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && frequencies_ == other.frequencies_ && preserve_ == other.preserve_;
  }

 private:
  void push(std::string token, std::size_t frequency);

  std::vector<std::string> tokens_;
  std::vector<std::size_t> frequencies_;
  std::unordered_map<std::string, std::int32_t> index_;
  PreserveList preserve_;
  std::size_t min_count_ = 1;
};

struct TokenSequence {
  std::vector<std::string> tokens;
  std::vector<std::int32_t> ids;
  std::size_t max_length = kMaxSequenceLength;
};

TokenSequence tokenize(std::string_view code, const Vocabulary& vocab, std::size_t max_length = kMaxSequenceLength);
inline TokenSequence tokenize(const codegraph::SourceUnit& unit, const Vocabulary& vocab,
                              std::size_t max_length = kMaxSequenceLength) {
  return tokenize(unit.code, vocab, max_length);
}

}  // namespace vulnformer::embedding
