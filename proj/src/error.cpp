#include "charcurve/error.hpp"

namespace charcurve {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kRawMarkerInInput: return "RawMarkerInInput";
    case ErrorCode::kInvalidEncoding: return "InvalidEncoding";
    case ErrorCode::kMalformedMarker: return "MalformedMarker";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kKOutOfRange: return "KOutOfRange";
    case ErrorCode::kInvalidK: return "InvalidK";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kSequenceTooLong: return "SequenceTooLong";
    case ErrorCode::kMisalignedCorpus: return "MisalignedCorpus";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kDegenerateDesign: return "DegenerateDesign";
    case ErrorCode::kAlphaZero: return "AlphaZero";
    case ErrorCode::kEmptyItems: return "EmptyItems";
    case ErrorCode::kGrammarInvalid: return "GrammarInvalid";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kNotASubset: return "NotASubset";
    case ErrorCode::kInternal: return "InternalError";
  }
  return "UnknownError";
}

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotASubset:
    case ErrorCode::kInternal:
      return 3;
    default:
      return 2;
  }
}

}  // namespace charcurve
