#include "vulnformer/embedding/vocabulary.hpp"

#include <algorithm>
#include <map>

#include "vulnformer/error.hpp"
#include "vulnformer/io/files.hpp"

namespace vulnformer::embedding {

Vocabulary::Vocabulary() {
  push(std::string(kPadToken), 0);
  push(std::string(kUnkToken), 0);
}

void Vocabulary::push(std::string token, std::size_t frequency) {
  index_.emplace(token, static_cast<std::int32_t>(tokens_.size()));
  tokens_.push_back(std::move(token));
  frequencies_.push_back(frequency);
}

Vocabulary Vocabulary::fit(std::span<const codegraph::SourceUnit> corpus, const FitOptions& options) {
  if (corpus.empty()) throw Error(ErrorKind::kEmptyCorpus, "cannot fit a vocabulary on an empty corpus");
  Vocabulary vocab;
  vocab.min_count_ = options.min_count;
  vocab.preserve_ = options.preserve;
  if (options.collect_declared_names) {
    for (const auto& unit : corpus) vocab.preserve_.merge(declared_names(unit.code));
  }
  std::map<std::string, std::size_t, std::less<>> counts;
  for (const auto& unit : corpus) {
    for (auto& tok : code_tokens(unit.code, vocab.preserve_, SIZE_MAX)) ++counts[std::move(tok)];
  }
  for (const auto& name : vocab.preserve_) counts.try_emplace(name, 0);

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts) {
    if (tok == kPadToken || tok == kUnkToken) continue;
    if (n >= options.min_count || vocab.preserve_.contains(tok)) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  for (auto& [tok, n] : kept) vocab.push(std::move(tok), n);
  return vocab;
}

std::int32_t Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw Error(ErrorKind::kIndexOutOfVocabulary, "token id " + std::to_string(id) + " outside vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

nlohmann::json Vocabulary::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    entries.push_back({{"token", tokens_[i]}, {"id", i}, {"frequency", frequencies_[i]}});
  }
  return {{"version", 1},
          {"min_count", min_count_},
          {"tokens", std::move(entries)},
          {"preserve_list", std::vector<std::string>(preserve_.begin(), preserve_.end())}};
}

Vocabulary Vocabulary::from_json(const nlohmann::json& value) {
  try {
    Vocabulary vocab;
    vocab.tokens_.clear();
    vocab.frequencies_.clear();
    vocab.index_.clear();
    vocab.min_count_ = value.at("min_count").get<std::size_t>();
    for (const auto& entry : value.at("tokens")) {
      if (entry.at("id").get<std::size_t>() != vocab.tokens_.size()) {
        throw Error(ErrorKind::kFormat, "vocabulary ids are not dense");
      }
      vocab.push(entry.at("token").get<std::string>(), entry.at("frequency").get<std::size_t>());
    }
    if (vocab.tokens_.size() < 2 || vocab.tokens_[0] != kPadToken || vocab.tokens_[1] != kUnkToken) {
      throw Error(ErrorKind::kFormat, "vocabulary must start with <pad>, <unk>");
    }
    for (const auto& name : value.at("preserve_list")) vocab.preserve_.insert(name.get<std::string>());
    return vocab;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("malformed vocabulary: ") + e.what());
  }
}

void Vocabulary::save(const std::filesystem::path& path) const { io::write_json(path, to_json()); }

Vocabulary Vocabulary::load(const std::filesystem::path& path) { return from_json(io::read_json(path)); }

TokenSequence tokenize(std::string_view code, const Vocabulary& vocab, std::size_t max_length) {
  TokenSequence seq;
  seq.max_length = max_length;
  seq.tokens = code_tokens(code, vocab.preserve_list(), max_length);
  seq.ids.reserve(seq.tokens.size());
  for (const auto& tok : seq.tokens) seq.ids.push_back(vocab.id(tok));
  return seq;
}

}  // namespace vulnformer::embedding
