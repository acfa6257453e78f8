#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trollscope {

enum class ErrorCode {
  MalformedRecord,
  MissingField,
  StorageFailure,
  MixedSubmission,
  EmptyInput,
  InsufficientCandidates,
  DegenerateLabels,
  TooFewRows,
  TransportError,
  EmptyCorpus,
  InsufficientAccounts,
  LengthMismatch,
  EmptyVocabulary,
  OutOfVocabulary,
  DimensionMismatch,
  ZeroVariance,
  EmptySample,
  EmptyCohort,
  InvalidConfig,
  InvalidArgument,
  MissingInput,
};

std::string_view to_string(ErrorCode code);

// Every recoverable failure in the library is an Error carrying a stable code;
// the CLI prints the code name so callers can match on it.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace trollscope
