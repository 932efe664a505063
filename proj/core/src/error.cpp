#include "vulnformer/error.hpp"

namespace vulnformer {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "ParseError";
    case ErrorKind::kUnsupportedConstruct: return "UnsupportedConstruct";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kShape: return "ShapeError";
    case ErrorKind::kFormat: return "FormatError";
    case ErrorKind::kSchema: return "SchemaError";
    case ErrorKind::kDuplicateId: return "DuplicateId";
    case ErrorKind::kEmptyCorpus: return "EmptyCorpus";
    case ErrorKind::kIndexOutOfVocabulary: return "IndexOutOfVocabulary";
    case ErrorKind::kOddDimension: return "OddDimension";
    case ErrorKind::kNonScalarLoss: return "NonScalarLoss";
    case ErrorKind::kInvalidConfig: return "InvalidConfig";
    case ErrorKind::kEmptyInput: return "EmptyInput";
    case ErrorKind::kEmptyPredictions: return "EmptyPredictions";
    case ErrorKind::kDivergence: return "DivergenceError";
    case ErrorKind::kIncompatibleCheckpoint: return "incompatible-checkpoint";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace vulnformer
