#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vulnformer {

enum class ErrorKind {
  kParse,
  kUnsupportedConstruct,
  kShapeMismatch,
  kShape,
  kFormat,
  kSchema,
  kDuplicateId,
  kEmptyCorpus,
  kIndexOutOfVocabulary,
  kOddDimension,
  kNonScalarLoss,
  kInvalidConfig,
  kEmptyInput,
  kEmptyPredictions,
  kDivergence,
  kIncompatibleCheckpoint,
  kIo,
};

// Stable identifier used in machine-readable error output.
std::string_view error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace vulnformer
