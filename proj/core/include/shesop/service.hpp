#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "shesop/persistence.hpp"
#include "shesop/session.hpp"
#include "shesop/sources.hpp"

namespace shesop::service {

/// One subscriber's bounded queue of serialized LiveEventWire documents.
class Subscription {
 public:
  enum class Status { item, timeout, closed, dropped };

  explicit Subscription(std::size_t capacity);

  /// Blocks up to `timeout` for the next document.
  Status wait_next(std::string& out, std::chrono::milliseconds timeout);

  bool dropped() const;
  std::size_t pending() const;

 private:
  friend class EventHub;

  bool offer(const std::string& doc);  // false when the buffer overflowed
  void close();

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::string> queue_;
  std::size_t capacity_;
  bool closed_ = false;
  bool dropped_ = false;
};

/// Fans live events out to subscribers without ever blocking the publisher:
/// a subscriber whose buffer would exceed its capacity is disconnected.
class EventHub {
 public:
  explicit EventHub(std::size_t buffer_capacity = 256);

  std::shared_ptr<Subscription> subscribe(const std::string& session_id);

  /// Assigns the next seq for the session and enqueues the event for every
  /// live subscriber. Returns how many subscribers received it.
  std::size_t broadcast(const std::string& session_id, const session::LiveEvent& event);

  /// Ends the session's stream; subscribers drain what is queued, later
  /// subscriptions start closed.
  void close(const std::string& session_id);

  std::uint64_t last_seq(const std::string& session_id) const;
  std::size_t subscriber_count(const std::string& session_id) const;

 private:
  struct Channel {
    std::uint64_t seq = 0;
    bool closed = false;
    std::vector<std::shared_ptr<Subscription>> subscribers;
  };

  mutable std::mutex mutex_;
  std::map<std::string, Channel> channels_;
  std::size_t capacity_;
};

struct ServiceOptions {
  session::EngineOptions engine;
  sources::SourceConfig sources;
  std::optional<persistence::UploadTarget> upload;
  persistence::Sleeper upload_sleeper;
  std::size_t subscriber_buffer = 256;
  /// Period of signal-loss checks while a source is silent.
  std::chrono::milliseconds tick_period{200};
};

/// Sessions, their packet runners and the live event hub: everything the
/// HTTP routes need, without HTTP.
class SessionService {
 public:
  explicit SessionService(ServiceOptions options);
  ~SessionService();

  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  std::string create(const session::SubjectEntry& entry, const session::SessionConfig& config = {});
  sources::SourceListing devices() const;

  /// Attaches the source and starts a runner thread that paces its packets
  /// in real time divided by the descriptor's speed.
  void attach(const std::string& session_id, const sources::SourceDescriptor& source);

  /// Feeds one packet through the engine and the hub. The runner uses this;
  /// tests may call it directly with the session in Recording state.
  std::vector<session::LiveEvent> ingest(const std::string& session_id, const wire::HrmPacket& packet,
                                         double elapsed_s);

  /// Stops the runner, finalizes the session and closes its event stream.
  session::SessionRecord stop(const std::string& session_id);

  session::SessionRecord record(const std::string& session_id) const;

  /// Throws Error{UploadNotConfigured}, Error{Rejected}, Error{Unreachable}.
  persistence::UploadReceipt upload(const std::string& session_id);

  /// Throws Error{UnknownSession}.
  std::shared_ptr<Subscription> subscribe(const std::string& session_id);

  /// True once the runner has consumed its whole source.
  bool source_exhausted(const std::string& session_id) const;

  session::SessionEngine& engine() noexcept { return engine_; }
  EventHub& hub() noexcept { return hub_; }
  const ServiceOptions& options() const noexcept { return options_; }

 private:
  struct Runner;

  void run(Runner& runner, std::unique_ptr<sources::PacketStream> stream);
  void publish(const std::string& session_id, const std::vector<session::LiveEvent>& events);
  std::shared_ptr<Runner> take_runner(const std::string& session_id);

  ServiceOptions options_;
  session::SessionEngine engine_;
  EventHub hub_;
  mutable std::mutex runners_mutex_;
  std::map<std::string, std::shared_ptr<Runner>> runners_;
};

}  // namespace shesop::service
