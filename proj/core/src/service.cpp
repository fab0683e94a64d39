#include "shesop/service.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "shesop/documents.hpp"
#include "shesop/error.hpp"

namespace shesop::service {

Subscription::Subscription(std::size_t capacity) : capacity_(capacity) {}

Subscription::Status Subscription::wait_next(std::string& out, std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_ || dropped_; });
  if (dropped_) return Status::dropped;
  if (!queue_.empty()) {
    out = std::move(queue_.front());
    queue_.pop_front();
    return Status::item;
  }
  return closed_ ? Status::closed : Status::timeout;
}

bool Subscription::dropped() const {
  std::lock_guard lock(mutex_);
  return dropped_;
}

std::size_t Subscription::pending() const {
  std::lock_guard lock(mutex_);
  return queue_.size();
}

bool Subscription::offer(const std::string& doc) {
  {
    std::lock_guard lock(mutex_);
    if (dropped_ || closed_) return false;
    if (queue_.size() >= capacity_) {
      dropped_ = true;
      queue_.clear();
    } else {
      queue_.push_back(doc);
    }
  }
  cv_.notify_all();
  return !dropped();
}

void Subscription::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  cv_.notify_all();
}

EventHub::EventHub(std::size_t buffer_capacity) : capacity_(std::max<std::size_t>(buffer_capacity, 1)) {}

std::shared_ptr<Subscription> EventHub::subscribe(const std::string& session_id) {
  auto sub = std::make_shared<Subscription>(capacity_);
  std::lock_guard lock(mutex_);
  auto& ch = channels_[session_id];
  if (ch.closed) {
    sub->close();
  } else {
    ch.subscribers.push_back(sub);
  }
  return sub;
}

std::size_t EventHub::broadcast(const std::string& session_id, const session::LiveEvent& event) {
  std::lock_guard lock(mutex_);
  auto& ch = channels_[session_id];
  const std::string doc = documents::live_event_document(session_id, ++ch.seq, event) + "\n";
  std::size_t delivered = 0;
  auto& subs = ch.subscribers;
  for (auto it = subs.begin(); it != subs.end();) {
    if ((*it)->offer(doc)) {
      ++delivered;
      ++it;
    } else {
      it = subs.erase(it);
    }
  }
  return delivered;
}

void EventHub::close(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  auto& ch = channels_[session_id];
  ch.closed = true;
  for (auto& s : ch.subscribers) s->close();
  ch.subscribers.clear();
}

std::uint64_t EventHub::last_seq(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  auto it = channels_.find(session_id);
  return it == channels_.end() ? 0 : it->second.seq;
}

std::size_t EventHub::subscriber_count(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  auto it = channels_.find(session_id);
  return it == channels_.end() ? 0 : it->second.subscribers.size();
}

struct SessionService::Runner {
  std::string session_id;
  double speed = 1.0;
  std::mutex mutex;
  std::condition_variable cv;
  bool stop_requested = false;
  std::atomic<bool> exhausted{false};
  std::thread thread;
};

SessionService::SessionService(ServiceOptions options)
    : options_(std::move(options)), engine_(options_.engine), hub_(options_.subscriber_buffer) {}

SessionService::~SessionService() {
  std::map<std::string, std::shared_ptr<Runner>> runners;
  {
    std::lock_guard lock(runners_mutex_);
    runners.swap(runners_);
  }
  for (auto& [id, r] : runners) {
    {
      std::lock_guard lock(r->mutex);
      r->stop_requested = true;
    }
    r->cv.notify_all();
    if (r->thread.joinable()) r->thread.join();
    hub_.close(id);
  }
}

std::string SessionService::create(const session::SubjectEntry& entry, const session::SessionConfig& config) {
  return engine_.create_session(entry, config);
}

sources::SourceListing SessionService::devices() const { return sources::list_sources(options_.sources); }

void SessionService::attach(const std::string& session_id, const sources::SourceDescriptor& source) {
  engine_.attach_source(session_id, source);
  std::unique_ptr<sources::PacketStream> stream;
  try {
    stream = sources::open_stream(source);
  } catch (const Error& e) {
    // The descriptor passed the availability probe but the file does not parse.
    engine_.stop(session_id);
    hub_.close(session_id);
    throw Error(ErrorCode::SourceUnavailable, e.what());
  }

  auto runner = std::make_shared<Runner>();
  runner->session_id = session_id;
  runner->speed = source.speed;
  {
    std::lock_guard lock(runners_mutex_);
    runners_[session_id] = runner;
  }
  runner->thread = std::thread([this, runner, s = std::move(stream)]() mutable { run(*runner, std::move(s)); });
}

void SessionService::publish(const std::string& session_id, const std::vector<session::LiveEvent>& events) {
  for (const auto& e : events) hub_.broadcast(session_id, e);
}

std::vector<session::LiveEvent> SessionService::ingest(const std::string& session_id, const wire::HrmPacket& packet,
                                                       double elapsed_s) {
  auto events = engine_.on_packet(session_id, packet, elapsed_s);
  publish(session_id, events);
  if (session::is_terminal(engine_.state(session_id))) hub_.close(session_id);
  return events;
}

void SessionService::run(Runner& runner, std::unique_ptr<sources::PacketStream> stream) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const auto wall_at = [&](double stream_s) {
    return start + std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(stream_s / runner.speed));
  };
  const auto stream_now = [&] {
    return std::chrono::duration<double>(clock::now() - start).count() * runner.speed;
  };

  try {
    while (auto note = stream->next()) {
      const auto due = wall_at(note->at_s);
      // Wake at least every tick period so a long silence still reports signal loss.
      for (;;) {
        std::unique_lock lock(runner.mutex);
        const auto wake = std::min(due, clock::now() + options_.tick_period);
        if (runner.cv.wait_until(lock, wake, [&] { return runner.stop_requested; })) return;
        if (clock::now() >= due) break;
        lock.unlock();
        publish(runner.session_id, engine_.tick(runner.session_id, std::min(stream_now(), note->at_s)));
      }
      const auto decoded = wire::try_decode_packet(note->payload);
      if (!decoded) continue;
      ingest(runner.session_id, *decoded.packet, note->at_s);
      if (session::is_terminal(engine_.state(runner.session_id))) return;
    }
    runner.exhausted = true;
    for (;;) {
      std::unique_lock lock(runner.mutex);
      if (runner.cv.wait_for(lock, options_.tick_period, [&] { return runner.stop_requested; })) return;
      lock.unlock();
      publish(runner.session_id, engine_.tick(runner.session_id, stream_now()));
      if (session::is_terminal(engine_.state(runner.session_id))) {
        hub_.close(runner.session_id);
        return;
      }
    }
  } catch (const Error&) {
    // WrongState: the session was finished underneath the runner.
    runner.exhausted = true;
  }
}

std::shared_ptr<SessionService::Runner> SessionService::take_runner(const std::string& session_id) {
  std::lock_guard lock(runners_mutex_);
  auto it = runners_.find(session_id);
  if (it == runners_.end()) return nullptr;
  auto r = it->second;
  runners_.erase(it);
  return r;
}

session::SessionRecord SessionService::stop(const std::string& session_id) {
  if (engine_.state(session_id) != session::SessionState::Recording) {
    // Surface WrongState without disturbing a runner.
    return engine_.stop(session_id);
  }
  if (auto r = take_runner(session_id)) {
    {
      std::lock_guard lock(r->mutex);
      r->stop_requested = true;
    }
    r->cv.notify_all();
    if (r->thread.joinable()) r->thread.join();
  }
  auto record = engine_.stop(session_id);
  hub_.close(session_id);
  return record;
}

session::SessionRecord SessionService::record(const std::string& session_id) const {
  return engine_.snapshot(session_id);
}

persistence::UploadReceipt SessionService::upload(const std::string& session_id) {
  auto rec = engine_.snapshot(session_id);
  if (!options_.upload) throw Error(ErrorCode::UploadNotConfigured, "set SHESOP_UPLOAD_URL");
  auto receipt = persistence::upload(rec, *options_.upload, options_.upload_sleeper);
  if (options_.engine.store) persistence::append_receipt(*options_.engine.store, session_id, receipt);
  return receipt;
}

std::shared_ptr<Subscription> SessionService::subscribe(const std::string& session_id) {
  const auto state = engine_.state(session_id);
  auto sub = hub_.subscribe(session_id);
  if (session::is_terminal(state)) hub_.close(session_id);
  return sub;
}

bool SessionService::source_exhausted(const std::string& session_id) const {
  std::lock_guard lock(runners_mutex_);
  auto it = runners_.find(session_id);
  return it != runners_.end() && it->second->exhausted.load();
}

}  // namespace shesop::service
