#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <thread>

#include "shesop/datasets.hpp"
#include "shesop/persistence.hpp"
#include "shesop/session.hpp"

using namespace shesop;
using namespace shesop::session;
using sources::ProfileKind;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

const datasets::ReferenceModels& models() {
  static const auto m = datasets::train_reference_models(7, 20);
  return m;
}

EngineOptions with_models() {
  EngineOptions o;
  o.analyzers.stress_model = std::make_shared<const svm::SvmModel>(models().stress);
  o.analyzers.flu_model = std::make_shared<const svm::SvmModel>(models().influenza);
  o.clock = [] { return std::string("2026-01-01T00:00:00Z"); };
  return o;
}

SubjectEntry subject() { return {"p-001", 34, Sex::female, "none"}; }

// Feeds the synthetic profile beat by beat; returns every event.
std::vector<LiveEvent> feed(SessionEngine& e, const std::string& id, ProfileKind p, std::uint64_t seed, double seconds) {
  std::vector<LiveEvent> events;
  double t = 0;
  for (double rr : sources::synthetic_rr(sources::SyntheticProfile::preset(p), seed, seconds)) {
    t += rr / 1000;
    auto ev = e.on_packet(id, sources::beat_packet(rr), t);
    events.insert(events.end(), ev.begin(), ev.end());
    if (is_terminal(e.state(id))) break;
  }
  return events;
}

std::string recording(SessionEngine& e, SessionConfig cfg = {}) {
  const auto id = e.create_session(subject(), cfg);
  e.attach_source(id, sources::SourceDescriptor::synthetic(ProfileKind::rest, 1, 607));
  return id;
}

}  // namespace

TEST(Subject, Validation) {
  EXPECT_NO_THROW(subject().validate());
  auto s = subject();
  s.age = 0;
  EXPECT_EQ(code_of([&] { s.validate(); }), ErrorCode::InvalidEntry);
  s.age = 131;
  EXPECT_EQ(code_of([&] { s.validate(); }), ErrorCode::InvalidEntry);
  s = subject();
  s.pseudonym.clear();
  EXPECT_EQ(code_of([&] { s.validate(); }), ErrorCode::InvalidEntry);
}

TEST(SessionConfig, Validation) {
  SessionConfig c;
  c.min_duration_s = 4000;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.min_duration_s = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Transitions, OnlyAlongTheGraph) {
  using S = SessionState;
  const std::vector<S> all{S::Idle, S::AwaitingDevice, S::Recording, S::Completed, S::InsufficientData, S::Failed};
  for (auto a : all) {
    for (auto b : all) {
      const bool want = (a == S::Idle && b == S::AwaitingDevice) || (a == S::AwaitingDevice && b == S::Recording) ||
                        (a == S::Recording && (b == S::Completed || b == S::InsufficientData || b == S::Failed));
      EXPECT_EQ(is_allowed_transition(a, b), want) << to_string(a) << "->" << to_string(b);
    }
  }
  for (auto s : all) EXPECT_EQ(state_from_string(to_string(s)), s);
}

TEST(Create, FreshDistinctIds) {
  SessionEngine e(with_models());
  const auto a = e.create_session(subject());
  const auto b = e.create_session(subject());
  EXPECT_NE(a, b);
  EXPECT_EQ(e.state(a), SessionState::AwaitingDevice);
  auto bad = subject();
  bad.age = 0;
  EXPECT_EQ(code_of([&] { e.create_session(bad); }), ErrorCode::InvalidEntry);
}

TEST(Create, ActiveSessionLimit) {
  auto o = with_models();
  o.max_active = 2;
  SessionEngine e(o);
  const auto a = e.create_session(subject());
  e.create_session(subject());
  EXPECT_EQ(code_of([&] { e.create_session(subject()); }), ErrorCode::TooManySessions);
  e.attach_source(a, sources::SourceDescriptor::synthetic(ProfileKind::rest, 1, 10));
  e.stop(a);
  EXPECT_NO_THROW(e.create_session(subject()));
}

TEST(Attach, StateRules) {
  SessionEngine e(with_models());
  const auto id = e.create_session(subject());
  EXPECT_EQ(code_of([&] { e.attach_source(id, sources::SourceDescriptor::replay("/nonexistent.csv")); }),
            ErrorCode::SourceUnavailable);
  EXPECT_EQ(e.state(id), SessionState::AwaitingDevice);
  e.attach_source(id, sources::SourceDescriptor::synthetic(ProfileKind::rest, 1, 10));
  EXPECT_EQ(e.state(id), SessionState::Recording);
  EXPECT_EQ(code_of([&] { e.attach_source(id, sources::SourceDescriptor::synthetic(ProfileKind::rest, 1, 10)); }),
            ErrorCode::WrongState);
  EXPECT_EQ(code_of([&] { e.state("ses-nope"); }), ErrorCode::UnknownSession);
  EXPECT_EQ(e.snapshot(id).started_at, "2026-01-01T00:00:00Z");
}

TEST(Packets, OneBeatEvent) {
  SessionEngine e(with_models());
  const auto id = recording(e);
  const auto ev = e.on_packet(id, wire::make_packet(61, {1024}), 1.0);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].hr_bpm, 61);
  EXPECT_EQ(ev[0].new_beats_ms, std::vector<double>{1000.0});
  EXPECT_EQ(ev[0].beat_count, 1u);
  EXPECT_EQ(ev[0].signal, Signal::ok);
}

TEST(Packets, SilenceBeyondTimeoutIsSignalLoss) {
  SessionEngine e(with_models());
  const auto id = recording(e);
  e.on_packet(id, wire::make_packet(60, {1024}), 1.0);
  EXPECT_TRUE(e.tick(id, 5.0).empty());
  const auto lost = e.tick(id, 16.0);
  ASSERT_EQ(lost.size(), 1u);
  EXPECT_EQ(lost[0].signal, Signal::lost);
  EXPECT_DOUBLE_EQ(lost[0].elapsed_s, 11.0);
  EXPECT_TRUE(e.tick(id, 17.0).empty());  // reported once
  const auto back = e.on_packet(id, wire::make_packet(60, {1024}), 18.0);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].signal, Signal::ok);
}

TEST(Packets, GapDetectedOnArrivalWithoutTicks) {
  SessionEngine e(with_models());
  const auto id = recording(e);
  e.on_packet(id, wire::make_packet(60, {1024}), 1.0);
  const auto ev = e.on_packet(id, wire::make_packet(60, {1024}), 16.0);
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_EQ(ev[0].signal, Signal::lost);
  EXPECT_EQ(ev[1].signal, Signal::ok);
  EXPECT_LE(ev[0].elapsed_s, ev[1].elapsed_s);
}

TEST(Packets, AfterTerminalStateIsWrongState) {
  SessionEngine e(with_models());
  const auto id = recording(e);
  e.stop(id);
  EXPECT_EQ(code_of([&] { e.on_packet(id, wire::make_packet(60, {1024}), 1.0); }), ErrorCode::WrongState);
  EXPECT_EQ(code_of([&] { e.stop(id); }), ErrorCode::WrongState);
  EXPECT_EQ(code_of([&] { e.tick(id, 3.0); }), ErrorCode::WrongState);
}

TEST(Packets, EventsAreMonotoneInElapsed) {
  SessionEngine e(with_models());
  const auto id = recording(e);
  const auto events = feed(e, id, ProfileKind::stress, 3, 120);
  for (std::size_t i = 1; i < events.size(); ++i) ASSERT_GE(events[i].elapsed_s, events[i - 1].elapsed_s);
  // a late timestamp is clamped rather than going backwards
  const auto ev = e.on_packet(id, wire::make_packet(60, {1024}), 1.0);
  EXPECT_GE(ev.back().elapsed_s, events.back().elapsed_s);
}

TEST(Stop, ShortRecordingIsInsufficientData) {
  SessionEngine e(with_models());
  const auto id = recording(e);
  feed(e, id, ProfileKind::rest, 2, 200);
  const auto r = e.stop(id);
  EXPECT_EQ(r.state, SessionState::InsufficientData);
  EXPECT_FALSE(r.report);
  EXPECT_FALSE(r.verdicts);
  EXPECT_NE(r.status_detail.find("300 s required"), std::string::npos) << r.status_detail;
  EXPECT_GT(r.rr.size(), 150u);
}

TEST(Stop, ZeroPacketsIsInsufficientData) {
  SessionEngine e(with_models());
  const auto id = recording(e);
  const auto r = e.stop(id);
  EXPECT_EQ(r.state, SessionState::InsufficientData);
  EXPECT_EQ(r.rr.size(), 0u);
  EXPECT_EQ(r.duration_s, 0.0);
}

TEST(Stop, TooFewCleanBeatsIsInsufficientData) {
  SessionEngine e(with_models());
  SessionConfig cfg;
  cfg.min_duration_s = 5;
  const auto id = recording(e, cfg);
  feed(e, id, ProfileKind::rest, 2, 30);
  const auto r = e.stop(id);
  EXPECT_EQ(r.state, SessionState::InsufficientData);
  EXPECT_NE(r.status_detail.find("clean beats"), std::string::npos);
}

TEST(Stop, FullRecordingIsCompleted) {
  for (auto [profile, seconds] : {std::pair{ProfileKind::rest, 607.0}, std::pair{ProfileKind::stress, 1202.0}}) {
    SessionEngine e(with_models());
    const auto id = recording(e);
    feed(e, id, profile, 11, seconds);
    const auto r = e.stop(id);
    ASSERT_EQ(r.state, SessionState::Completed) << r.status_detail;
    ASSERT_TRUE(r.report);
    ASSERT_TRUE(r.verdicts);
    EXPECT_EQ(r.verdicts->stress.positive, profile == ProfileKind::stress);
    EXPECT_FALSE(r.verdicts->influenza.positive);
    // report window matches the session within one beat interval
    const double beat = r.report->time.mean_rr_ms / 1000;
    EXPECT_NEAR(r.report->window.duration_s(), r.duration_s, beat + 1e-9);
    EXPECT_EQ(r.rr.size(), r.rr_clean.size() + r.removed_beats);
  }
}

TEST(Stop, MissingModelsFailTheAnalysis) {
  auto o = with_models();
  o.analyzers.flu_model.reset();
  SessionEngine e(o);
  const auto id = recording(e);
  feed(e, id, ProfileKind::rest, 2, 400);
  const auto r = e.stop(id);
  EXPECT_EQ(r.state, SessionState::Failed);
  EXPECT_EQ(r.status_detail.rfind("AnalysisFailed(", 0), 0u) << r.status_detail;
  EXPECT_FALSE(r.report);
}

TEST(Stop, MaxDurationFinishesTheSession) {
  SessionEngine e(with_models());
  SessionConfig cfg;
  cfg.min_duration_s = 100;
  cfg.max_duration_s = 350;
  const auto id = recording(e, cfg);
  feed(e, id, ProfileKind::rest, 2, 600);
  EXPECT_EQ(e.state(id), SessionState::Completed);
  EXPECT_GE(e.snapshot(id).duration_s, 350);
  EXPECT_LT(e.snapshot(id).duration_s, 352);
}

TEST(Stop, PersistsToTheStore) {
  const auto dir = std::filesystem::temp_directory_path() / "shesop-session-store";
  std::filesystem::remove_all(dir);
  auto o = with_models();
  o.store = std::make_shared<persistence::SessionStore>(dir);
  SessionEngine e(o);
  const auto id = recording(e);
  feed(e, id, ProfileKind::rest, 2, 320);
  const auto r = e.stop(id);
  EXPECT_EQ(o.store->load_session(id), r);
  std::filesystem::remove_all(dir);
}

// Random operation sequences against a two-line model of the state machine.
TEST(StateMachine, RandomOperationSequencesFollowTheGraph) {
  auto opts = with_models();
  opts.max_active = 0;
  SessionEngine e(opts);
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> op(0, 5);
  for (int round = 0; round < 200; ++round) {
    SessionConfig cfg;
    cfg.min_duration_s = 2;
    cfg.min_beats = 4;
    const auto id = e.create_session(subject(), cfg);
    SessionState model = SessionState::AwaitingDevice;
    double t = 0;
    for (int step = 0; step < 12; ++step) {
      const int o = op(rng);
      std::optional<ErrorCode> err;
      try {
        switch (o) {
          case 0: e.attach_source(id, sources::SourceDescriptor::synthetic(ProfileKind::rest, 1, 10)); break;
          case 1: e.attach_source(id, sources::SourceDescriptor::replay("/nonexistent.csv")); break;
          case 2:
          case 3: e.on_packet(id, wire::make_packet(70, {860}), t += 0.84); break;
          case 4: e.tick(id, t += 0.5); break;
          case 5: e.stop(id); break;
        }
      } catch (const Error& ex) {
        err = ex.code();
      }
      const auto actual = e.state(id);
      switch (o) {
        case 0:
          if (model == SessionState::AwaitingDevice) {
            ASSERT_FALSE(err);
            model = SessionState::Recording;
          } else {
            ASSERT_EQ(err, ErrorCode::WrongState);
          }
          break;
        case 1:
          ASSERT_TRUE(err);
          break;
        case 5:
          if (model == SessionState::Recording) {
            ASSERT_FALSE(err);
            ASSERT_TRUE(is_terminal(actual));
            model = actual;
          } else {
            ASSERT_EQ(err, ErrorCode::WrongState);
          }
          break;
        default:
          if (model == SessionState::Recording) {
            ASSERT_FALSE(err);
          } else {
            ASSERT_EQ(err, ErrorCode::WrongState);
          }
      }
      ASSERT_EQ(actual, model);
      const auto rec = e.snapshot(id);
      ASSERT_EQ(rec.report.has_value(), rec.state == SessionState::Completed);
      ASSERT_EQ(rec.verdicts.has_value(), rec.state == SessionState::Completed);
    }
  }
}

TEST(Concurrency, IndependentSessionsInParallel) {
  SessionEngine e(with_models());
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(recording(e));
  std::vector<std::thread> workers;
  for (int i = 0; i < 4; ++i) {
    workers.emplace_back([&, i] { feed(e, ids[static_cast<std::size_t>(i)], ProfileKind::rest, static_cast<std::uint64_t>(i), 320); });
  }
  std::thread reader([&] {
    for (int k = 0; k < 200; ++k) {
      for (const auto& id : ids) e.snapshot(id);
    }
  });
  for (auto& w : workers) w.join();
  reader.join();
  for (const auto& id : ids) EXPECT_EQ(e.stop(id).state, SessionState::Completed);
  EXPECT_EQ(e.active_count(), 0u);
}
