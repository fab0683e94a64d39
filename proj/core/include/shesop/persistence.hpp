#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "shesop/session.hpp"

namespace shesop::persistence {

/// Hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

/// Full stored form: {"schema":1, "created_at", "sha256", "record"}.
std::string session_document(const session::SessionRecord& record, const std::string& created_at);

/// Throws Error{SchemaMismatch} or Error{Corrupt}.
session::SessionRecord parse_session_document(std::string_view text);

/// One JSON document per session under a directory, written to a temporary
/// file and renamed into place.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path path_for(const std::string& session_id) const;

  /// Throws Error{IoError}.
  std::filesystem::path save_session(const session::SessionRecord& record);
  /// Throws Error{FileNotFound}, Error{SchemaMismatch}, Error{Corrupt}.
  session::SessionRecord load_session(const std::string& session_id) const;

 private:
  std::filesystem::path root_;
};

std::filesystem::path save_session(const session::SessionRecord& record, const std::filesystem::path& path);
session::SessionRecord load_session(const std::filesystem::path& path);

/// Writes the raw RR series as `t_s,rr_ms` CSV. Throws Error{NoData}.
void export_rr_csv(const session::SessionRecord& record, const std::filesystem::path& path);

struct UploadTarget {
  std::string endpoint;  // http://host[:port][/prefix]
  std::string bearer_token;
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{1000};
  std::chrono::milliseconds timeout{5000};

  /// Reads SHESOP_UPLOAD_URL and SHESOP_UPLOAD_TOKEN; nullopt without a URL.
  static std::optional<UploadTarget> from_env();
};

struct UploadReceipt {
  int status = 0;  // last HTTP status, 0 when no response arrived
  int attempts = 0;
  std::optional<std::string> remote_id;
  std::vector<std::chrono::milliseconds> delays;  // backoff slept before attempts 2..n

  friend bool operator==(const UploadReceipt&, const UploadReceipt&) = default;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// PUTs the stored session document to <endpoint>/<session_id>.json with a
/// bearer token. 2xx succeeds; 5xx and transport failures are retried with
/// doubling backoff; other statuses fail at once.
/// Throws Error{Rejected} (status in detail) or Error{Unreachable}.
UploadReceipt upload(const session::SessionRecord& record, const UploadTarget& target,
                     const Sleeper& sleeper = {});

/// Appends one line per receipt to <root>/<session_id>.receipts.jsonl.
void append_receipt(const SessionStore& store, const std::string& session_id, const UploadReceipt& receipt);
std::vector<UploadReceipt> load_receipts(const SessionStore& store, const std::string& session_id);

}  // namespace shesop::persistence
