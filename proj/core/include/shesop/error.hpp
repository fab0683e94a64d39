#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shesop {

/// Every failure the library reports carries one of these codes. The names
/// are part of the wire contract: they appear verbatim in HTTP error bodies
/// and CLI diagnostics.
enum class ErrorCode {
  // hrm_wire
  Truncated,
  TrailingBytes,
  InvariantViolation,
  // rr_preprocess / device_sources
  AllBeatsRejected,
  FileNotFound,
  ParseError,
  // hrv_features
  TooFewBeats,
  BadGrid,
  GridDoesNotCoverBands,
  NonpositiveTolerance,
  // svm_classifier
  SingleClass,
  InconsistentFeatures,
  MissingFeature,
  CorruptModel,
  // documents / persistence
  SchemaMismatch,
  Corrupt,
  NoData,
  IoError,
  // session engine
  InvalidEntry,
  WrongState,
  SourceUnavailable,
  AnalysisFailed,
  UnknownSession,
  TooManySessions,
  // upload
  Rejected,
  Unreachable,
  UploadNotConfigured,
  // generic
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Process exit status classes used by the command-line tool.
enum class ErrorClass { Usage = 1, Data = 2, Analysis = 3, Network = 4 };

ErrorClass classify(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace shesop
