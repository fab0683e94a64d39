#include "shesop/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <random>

#include "shesop/error.hpp"
#include "shesop/persistence.hpp"

namespace shesop::session {

std::string_view to_string(Sex sex) noexcept {
  switch (sex) {
    case Sex::female: return "female";
    case Sex::male: return "male";
    case Sex::unspecified: return "unspecified";
  }
  return "unspecified";
}

Sex sex_from_string(std::string_view text) {
  if (text == "female") return Sex::female;
  if (text == "male") return Sex::male;
  if (text == "unspecified" || text.empty()) return Sex::unspecified;
  throw Error(ErrorCode::InvalidEntry, "sex must be female, male or unspecified");
}

void SubjectEntry::validate() const {
  if (pseudonym.empty()) throw Error(ErrorCode::InvalidEntry, "pseudonym must not be empty");
  if (age < 1 || age > 130) throw Error(ErrorCode::InvalidEntry, "age must lie in [1, 130]");
}

void SessionConfig::validate() const {
  if (!(min_duration_s > 0.0 && min_duration_s < max_duration_s)) {
    throw Error(ErrorCode::InvalidArgument, "require 0 < min_duration_s < max_duration_s");
  }
  if (!(gap_timeout_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "gap_timeout_s must be > 0");
  if (min_beats < 4) throw Error(ErrorCode::InvalidArgument, "min_beats must be >= 4");
}

std::string_view to_string(SessionState state) noexcept {
  switch (state) {
    case SessionState::Idle: return "Idle";
    case SessionState::AwaitingDevice: return "AwaitingDevice";
    case SessionState::Recording: return "Recording";
    case SessionState::Completed: return "Completed";
    case SessionState::InsufficientData: return "InsufficientData";
    case SessionState::Failed: return "Failed";
  }
  return "Idle";
}

SessionState state_from_string(std::string_view text) {
  for (auto s : {SessionState::Idle, SessionState::AwaitingDevice, SessionState::Recording,
                 SessionState::Completed, SessionState::InsufficientData, SessionState::Failed}) {
    if (to_string(s) == text) return s;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown session state '" + std::string(text) + "'");
}

std::string_view to_string(Signal s) noexcept { return s == Signal::ok ? "ok" : "lost"; }

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct SessionEngine::Session {
  std::mutex mutex;
  SessionRecord record;
  RrAccumulator accumulator;
  double last_packet_s = 0.0;
  double clock_s = 0.0;
  bool lost = false;
  std::uint16_t last_hr = 0;
};

namespace {

[[noreturn]] void wrong_state(const SessionRecord& r, std::string_view op) {
  throw Error(ErrorCode::WrongState, std::string(op) + " not allowed in state " + std::string(to_string(r.state)));
}

void transition(SessionRecord& r, SessionState to) {
  if (!is_allowed_transition(r.state, to)) wrong_state(r, to_string(to));
  r.state = to;
}

}  // namespace

SessionEngine::SessionEngine(EngineOptions options) : options_(std::move(options)) {
  if (!options_.clock) options_.clock = utc_now;
  options_.analyzers.clean.validate();
  std::random_device rd;
  id_salt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

SessionEngine::~SessionEngine() = default;

std::shared_ptr<SessionEngine::Session> SessionEngine::find(const std::string& session_id) const {
  std::shared_lock lock(map_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, session_id);
  return it->second;
}

std::string SessionEngine::create_session(const SubjectEntry& entry, const SessionConfig& config) {
  entry.validate();
  config.validate();

  auto s = std::make_shared<Session>();
  s->record.subject = entry;
  s->record.config = config;
  transition(s->record, SessionState::AwaitingDevice);

  std::unique_lock lock(map_mutex_);
  if (options_.max_active > 0) {
    std::size_t active = 0;
    for (const auto& [id, other] : sessions_) {
      std::lock_guard g(other->mutex);
      if (!is_terminal(other->record.state)) ++active;
    }
    if (active >= options_.max_active) {
      throw Error(ErrorCode::TooManySessions, std::to_string(active) + " sessions active");
    }
  }
  char buf[48];
  std::snprintf(buf, sizeof buf, "ses-%016llx-%llu", static_cast<unsigned long long>(id_salt_),
                static_cast<unsigned long long>(++counter_));
  s->record.session_id = buf;
  s->accumulator = RrAccumulator(s->record.session_id);
  sessions_.emplace(s->record.session_id, s);
  return s->record.session_id;
}

void SessionEngine::attach_source(const std::string& session_id, const sources::SourceDescriptor& source) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  if (s->record.state != SessionState::AwaitingDevice) wrong_state(s->record, "attach_source");
  sources::check_available(source);
  s->record.source = source;
  s->record.started_at = options_.clock();
  s->accumulator = RrAccumulator(source.name);
  transition(s->record, SessionState::Recording);
}

std::vector<LiveEvent> SessionEngine::on_packet(const std::string& session_id, const wire::HrmPacket& packet,
                                                double elapsed_s) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  if (s->record.state != SessionState::Recording) wrong_state(s->record, "on_packet");

  const double now = std::max(elapsed_s, s->clock_s);
  const double timeout = s->record.config.gap_timeout_s;
  std::vector<LiveEvent> events;

  if (!s->lost && now - s->last_packet_s >= timeout) {
    s->lost = true;
    events.push_back({s->last_packet_s + timeout, s->last_hr, {}, s->accumulator.series().size(), Signal::lost});
  }

  const std::size_t before = s->accumulator.series().size();
  s->accumulator.push(packet);
  const auto& beats = s->accumulator.series().beats;

  LiveEvent ev;
  ev.elapsed_s = now;
  ev.hr_bpm = packet.heart_rate;
  for (std::size_t i = before; i < beats.size(); ++i) ev.new_beats_ms.push_back(beats[i].rr_ms);
  ev.beat_count = beats.size();
  ev.signal = Signal::ok;
  events.push_back(std::move(ev));

  s->lost = false;
  s->last_packet_s = now;
  s->clock_s = now;
  s->last_hr = packet.heart_rate;
  s->record.duration_s = now;

  if (now >= s->record.config.max_duration_s) finish(*s);
  return events;
}

std::vector<LiveEvent> SessionEngine::tick(const std::string& session_id, double elapsed_s) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  if (s->record.state != SessionState::Recording) wrong_state(s->record, "tick");

  const double now = std::max(elapsed_s, s->clock_s);
  s->clock_s = now;
  std::vector<LiveEvent> events;
  const double timeout = s->record.config.gap_timeout_s;
  if (!s->lost && now - s->last_packet_s >= timeout) {
    s->lost = true;
    events.push_back({s->last_packet_s + timeout, s->last_hr, {}, s->accumulator.series().size(), Signal::lost});
  }
  if (now >= s->record.config.max_duration_s) finish(*s);
  return events;
}

void SessionEngine::finish(Session& s) {
  auto& r = s.record;
  const auto& cfg = r.config;
  r.rr = s.accumulator.series();

  try {
    auto cleaned = filter_ectopic(r.rr, options_.analyzers.clean);
    r.rr_clean = std::move(cleaned.series);
    r.removed_beats = cleaned.removed_count;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AllBeatsRejected) throw;
    r.rr_clean = RrSeries{{}, r.rr.source_id};
    r.removed_beats = r.rr.size();
  }

  char detail[160];
  if (r.duration_s < cfg.min_duration_s) {
    std::snprintf(detail, sizeof detail, "recorded %.1f s, at least %.0f s required", r.duration_s,
                  cfg.min_duration_s);
    r.status_detail = detail;
    transition(r, SessionState::InsufficientData);
  } else if (r.rr_clean.size() < cfg.min_beats) {
    std::snprintf(detail, sizeof detail, "%zu clean beats, at least %zu required", r.rr_clean.size(),
                  cfg.min_beats);
    r.status_detail = detail;
    transition(r, SessionState::InsufficientData);
  } else {
    try {
      const auto& a = options_.analyzers;
      if (!a.stress_model || !a.flu_model) throw Error(ErrorCode::AnalysisFailed, "no classifier models loaded");
      auto report_cfg = a.report;
      report_cfg.min_beats = cfg.min_beats;
      auto report = hrv::compute_report(r.rr_clean, report_cfg);
      auto verdicts = svm::classify_condition(report, *a.stress_model, *a.flu_model);
      r.report = std::move(report);
      r.verdicts = std::move(verdicts);
      transition(r, SessionState::Completed);
    } catch (const Error& e) {
      r.report.reset();
      r.verdicts.reset();
      r.status_detail = std::string(to_string(ErrorCode::AnalysisFailed)) + "(" + e.what() + ")";
      transition(r, SessionState::Failed);
    }
  }

  if (options_.store) options_.store->save_session(r);
}

SessionRecord SessionEngine::stop(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  if (s->record.state != SessionState::Recording) wrong_state(s->record, "stop");
  finish(*s);
  return s->record;
}

SessionRecord SessionEngine::snapshot(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  SessionRecord r = s->record;
  if (r.state == SessionState::Recording) r.rr = s->accumulator.series();
  return r;
}

SessionState SessionEngine::state(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  return s->record.state;
}

std::vector<std::string> SessionEngine::session_ids() const {
  std::shared_lock lock(map_mutex_);
  std::vector<std::string> ids;
  ids.reserve(sessions_.size());
  for (const auto& [id, s] : sessions_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::size_t SessionEngine::active_count() const {
  std::shared_lock lock(map_mutex_);
  std::size_t n = 0;
  for (const auto& [id, s] : sessions_) {
    std::lock_guard g(s->mutex);
    if (!is_terminal(s->record.state)) ++n;
  }
  return n;
}

}  // namespace shesop::session
