#pragma once

// Versioned JSON documents (`"schema": 1`) shared by the CLI, the HTTP service
// and the on-disk store. Readers reject any other schema with
// Error{SchemaMismatch}.

#include <cstdint>
#include <string>
#include <string_view>

#include "shesop/hrv.hpp"
#include "shesop/persistence.hpp"
#include "shesop/session.hpp"
#include "shesop/sources.hpp"
#include "shesop/svm.hpp"

namespace shesop::documents {

inline constexpr int kSchemaVersion = 1;

/// Flat key/value report with unit-suffixed keys (`sdnn_ms`, `lf_power_ms2`,
/// `sampen`, ...). Absent optional values are written as null.
std::string report_to_document(const hrv::HrvReport& report);
/// Throws Error{SchemaMismatch} or Error{ParseError}.
hrv::HrvReport report_from_document(std::string_view text);

std::string model_to_document(const svm::SvmModel& model);
/// Throws Error{SchemaMismatch} or Error{CorruptModel}.
svm::SvmModel model_from_document(std::string_view text);

std::string verdicts_to_document(const svm::ConditionResult& verdicts);

/// Canonical record body (sorted keys, compact). Its SHA-256 is the stored digest.
std::string record_to_canonical_json(const session::SessionRecord& record);
/// Throws Error{Corrupt} on malformed content.
session::SessionRecord record_from_json(std::string_view text);

/// Short form returned by stop: state, duration, report and verdicts.
std::string record_summary_document(const session::SessionRecord& record);

std::string live_event_document(const std::string& session_id, std::uint64_t seq,
                                const session::LiveEvent& event);

std::string source_to_document(const sources::SourceDescriptor& source);
/// Accepts a full descriptor or just {"name": "..."}; explicit fields override
/// what the name implies. Throws Error{SourceUnavailable} or Error{InvalidArgument}.
sources::SourceDescriptor source_from_document(std::string_view text);

/// Throws Error{InvalidEntry}.
session::SubjectEntry subject_from_document(std::string_view text);

/// POST /sessions body: the subject fields plus an optional "config" object
/// overriding SessionConfig defaults. Throws Error{InvalidEntry}.
struct CreateRequest {
  session::SubjectEntry subject;
  session::SessionConfig config;
};
CreateRequest create_request_from_document(std::string_view text);

std::string devices_document(const sources::SourceListing& listing);
std::string receipt_document(const persistence::UploadReceipt& receipt);

std::string error_document(ErrorCode code, std::string_view detail);

}  // namespace shesop::documents
