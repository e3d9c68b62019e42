#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace charcurve {

enum class ErrorCode {
  // data errors
  kRawMarkerInInput,
  kInvalidEncoding,
  kMalformedMarker,
  kEmptyCorpus,
  kKOutOfRange,
  kInvalidK,
  kConfigInvalid,
  kSequenceTooLong,
  kMisalignedCorpus,
  kLengthMismatch,
  kEmptyInput,
  kDegenerateDesign,
  kAlphaZero,
  kEmptyItems,
  kGrammarInvalid,
  kSchemaError,
  kMissingFile,
  kIo,
  kParse,
  // internal invariant violations
  kNotASubset,
  kInternal,
};

std::string_view error_code_name(ErrorCode code);

// Process exit status for an error: 2 for data errors, 3 for invariant violations.
int exit_status(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // Message without the code name.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace charcurve
