#include "shesop/error.hpp"

namespace shesop {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::TrailingBytes: return "TrailingBytes";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::AllBeatsRejected: return "AllBeatsRejected";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::TooFewBeats: return "TooFewBeats";
    case ErrorCode::BadGrid: return "BadGrid";
    case ErrorCode::GridDoesNotCoverBands: return "GridDoesNotCoverBands";
    case ErrorCode::NonpositiveTolerance: return "NonpositiveTolerance";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::InconsistentFeatures: return "InconsistentFeatures";
    case ErrorCode::MissingFeature: return "MissingFeature";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::Corrupt: return "Corrupt";
    case ErrorCode::NoData: return "NoData";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidEntry: return "InvalidEntry";
    case ErrorCode::WrongState: return "WrongState";
    case ErrorCode::SourceUnavailable: return "SourceUnavailable";
    case ErrorCode::AnalysisFailed: return "AnalysisFailed";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::TooManySessions: return "TooManySessions";
    case ErrorCode::Rejected: return "Rejected";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::UploadNotConfigured: return "UploadNotConfigured";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

ErrorClass classify(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
      return ErrorClass::Usage;
    case ErrorCode::AllBeatsRejected:
    case ErrorCode::BadGrid:
    case ErrorCode::GridDoesNotCoverBands:
    case ErrorCode::NonpositiveTolerance:
    case ErrorCode::SingleClass:
    case ErrorCode::InconsistentFeatures:
    case ErrorCode::MissingFeature:
    case ErrorCode::AnalysisFailed:
      return ErrorClass::Analysis;
    case ErrorCode::Rejected:
    case ErrorCode::Unreachable:
    case ErrorCode::UploadNotConfigured:
      return ErrorClass::Network;
    default:
      return ErrorClass::Data;
  }
}

Error::Error(ErrorCode code, std::string detail)
    : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
      code_(code),
      detail_(std::move(detail)) {}

}  // namespace shesop
