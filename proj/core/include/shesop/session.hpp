#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "shesop/hrv.hpp"
#include "shesop/rr_series.hpp"
#include "shesop/sources.hpp"
#include "shesop/svm.hpp"

namespace shesop::persistence {
class SessionStore;
}

namespace shesop::session {

enum class Sex { female, male, unspecified };

std::string_view to_string(Sex sex) noexcept;
Sex sex_from_string(std::string_view text);

struct SubjectEntry {
  std::string pseudonym;
  int age = 0;
  Sex sex = Sex::unspecified;
  std::string self_reported_condition;

  /// Throws Error{InvalidEntry}.
  void validate() const;

  friend bool operator==(const SubjectEntry&, const SubjectEntry&) = default;
};

struct SessionConfig {
  double min_duration_s = 300.0;
  double max_duration_s = 3600.0;
  double gap_timeout_s = 10.0;
  std::size_t min_beats = 60;

  /// Throws Error{InvalidArgument}.
  void validate() const;

  friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

enum class SessionState { Idle, AwaitingDevice, Recording, Completed, InsufficientData, Failed };

std::string_view to_string(SessionState state) noexcept;
SessionState state_from_string(std::string_view text);

constexpr bool is_terminal(SessionState s) noexcept {
  return s == SessionState::Completed || s == SessionState::InsufficientData || s == SessionState::Failed;
}

/// Allowed edges: Idle -> AwaitingDevice -> Recording -> {Completed, InsufficientData, Failed}.
constexpr bool is_allowed_transition(SessionState from, SessionState to) noexcept {
  switch (from) {
    case SessionState::Idle: return to == SessionState::AwaitingDevice;
    case SessionState::AwaitingDevice: return to == SessionState::Recording;
    case SessionState::Recording: return is_terminal(to);
    default: return false;
  }
}

enum class Signal { ok, lost };

std::string_view to_string(Signal s) noexcept;

struct LiveEvent {
  double elapsed_s = 0.0;
  std::uint16_t hr_bpm = 0;
  std::vector<double> new_beats_ms;
  std::size_t beat_count = 0;
  Signal signal = Signal::ok;

  friend bool operator==(const LiveEvent&, const LiveEvent&) = default;
};

struct SessionRecord {
  std::string session_id;
  SubjectEntry subject;
  SessionConfig config;
  std::optional<sources::SourceDescriptor> source;
  std::string started_at;  // ISO-8601 UTC, set when recording starts
  double duration_s = 0.0;  // stream time of the last packet
  RrSeries rr;
  RrSeries rr_clean;
  std::size_t removed_beats = 0;
  std::optional<hrv::HrvReport> report;
  std::optional<svm::ConditionResult> verdicts;
  SessionState state = SessionState::Idle;
  std::string status_detail;  // why InsufficientData / Failed

  friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

struct Analyzers {
  std::shared_ptr<const svm::SvmModel> stress_model;
  std::shared_ptr<const svm::SvmModel> flu_model;
  CleanConfig clean;
  hrv::ReportConfig report;
};

struct EngineOptions {
  Analyzers analyzers;
  /// Persists every finished record when set.
  std::shared_ptr<persistence::SessionStore> store;
  /// Wall clock used for started_at; defaults to the system clock.
  std::function<std::string()> clock;
  /// Sessions not yet in a terminal state; 0 disables the limit.
  std::size_t max_active = 16;
};

/// Owns every session. Each session is mutated by one caller at a time
/// (a per-session mutex); distinct sessions proceed in parallel.
class SessionEngine {
 public:
  explicit SessionEngine(EngineOptions options);
  ~SessionEngine();

  SessionEngine(const SessionEngine&) = delete;
  SessionEngine& operator=(const SessionEngine&) = delete;

  /// Throws Error{InvalidEntry}, Error{InvalidArgument}, Error{TooManySessions}.
  std::string create_session(const SubjectEntry& entry, const SessionConfig& config = {});

  /// Throws Error{UnknownSession}, Error{WrongState}, Error{SourceUnavailable}.
  void attach_source(const std::string& session_id, const sources::SourceDescriptor& source);

  /// elapsed_s is recording time. Emits a `lost` event before the packet's own
  /// event when the gap since the previous packet reached gap_timeout_s.
  /// Reaching max_duration_s finishes the session after the packet is applied.
  /// Throws Error{UnknownSession}, Error{WrongState}.
  std::vector<LiveEvent> on_packet(const std::string& session_id, const wire::HrmPacket& packet,
                                   double elapsed_s);

  /// Advances the recording clock without a packet; may emit a `lost` event.
  std::vector<LiveEvent> tick(const std::string& session_id, double elapsed_s);

  /// Throws Error{UnknownSession}, Error{WrongState}.
  SessionRecord stop(const std::string& session_id);

  SessionRecord snapshot(const std::string& session_id) const;
  SessionState state(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;
  std::size_t active_count() const;

  const EngineOptions& options() const noexcept { return options_; }

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& session_id) const;
  void finish(Session& s);

  EngineOptions options_;
  mutable std::shared_mutex map_mutex_;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t counter_ = 0;
  std::uint64_t id_salt_;
};

/// ISO-8601 UTC timestamp with second resolution.
std::string utc_now();

}  // namespace shesop::session
