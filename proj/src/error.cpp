#include "trollscope/error.hpp"

namespace trollscope {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::StorageFailure: return "StorageFailure";
    case ErrorCode::MixedSubmission: return "MixedSubmission";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InsufficientCandidates: return "InsufficientCandidates";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::InsufficientAccounts: return "InsufficientAccounts";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyVocabulary: return "EmptyVocabulary";
    case ErrorCode::OutOfVocabulary: return "OutOfVocabulary";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::EmptyCohort: return "EmptyCohort";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingInput: return "MissingInput";
  }
  return "Unknown";
}

}  // namespace trollscope
