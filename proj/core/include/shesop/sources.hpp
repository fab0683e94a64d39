#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "shesop/hrm_wire.hpp"
#include "shesop/rr_series.hpp"

namespace shesop::sources {

enum class SourceKind { replay, synthetic };
enum class ProfileKind { rest, stress, influenza };

std::string_view to_string(SourceKind kind) noexcept;
std::string_view to_string(ProfileKind kind) noexcept;
/// Throws Error{InvalidArgument}.
ProfileKind profile_from_string(std::string_view name);

struct SyntheticProfile {
  double mean_rr_ms;
  double lf_amp_ms;
  double hf_amp_ms;
  double jitter_ms;
  double lf_freq_hz = 0.1;
  double hf_freq_hz = 0.25;

  static SyntheticProfile preset(ProfileKind kind);
  void validate() const;
};

/// What a stand-in "device" is and how to open it. `name` is the stable
/// identifier shown in device lists: "synthetic:rest", "replay:<path>".
struct SourceDescriptor {
  SourceKind kind = SourceKind::synthetic;
  std::string name;
  double speed = 1.0;  // pacing factor, > 0
  // replay
  std::filesystem::path path;
  // synthetic
  ProfileKind profile = ProfileKind::rest;
  std::uint64_t seed = 42;
  double duration_s = 607.0;
  /// Notification period on the stream clock; 0 sends one packet per beat.
  double notify_interval_s = 0.0;

  /// Throws Error{InvalidArgument}.
  void validate() const;

  static SourceDescriptor synthetic(ProfileKind profile, std::uint64_t seed, double duration_s,
                                    double speed = 1.0);
  static SourceDescriptor replay(std::filesystem::path path, double speed = 1.0);

  friend bool operator==(const SourceDescriptor&, const SourceDescriptor&) = default;
};

/// Parses "replay:FILE" or "synthetic:PROFILE". Throws Error{SourceUnavailable}.
SourceDescriptor parse_source_spec(const std::string& spec);

struct SourceConfig {
  std::optional<std::filesystem::path> replay_dir;
  std::uint64_t synthetic_seed = 42;
  double synthetic_duration_s = 607.0;
};

struct SourceListing {
  std::vector<SourceDescriptor> sources;
  std::vector<std::string> diagnostics;
};

/// Replay files (*.csv in replay_dir, sorted by name) followed by the rest and
/// stress synthetic profiles.
SourceListing list_sources(const SourceConfig& config);

/// Throws Error{SourceUnavailable} when the descriptor cannot be opened.
void check_available(const SourceDescriptor& descriptor);

/// One encoded notification and the stream-clock time it is sent at.
struct Notification {
  std::vector<std::uint8_t> payload;
  double at_s = 0.0;
};

class PacketStream {
 public:
  virtual ~PacketStream() = default;
  virtual std::optional<Notification> next() = 0;
};

/// Packet for one beat as a strap would report it: hr = round(60000 / rr),
/// rr_raw = round(rr * 1024 / 1000).
wire::HrmPacket beat_packet(double rr_ms);

/// Throws Error{FileNotFound} or Error{ParseError}. Emits one packet per beat
/// at the beat's cumulative time.
std::unique_ptr<PacketStream> open_replay(const SourceDescriptor& descriptor);

/// rr_k = mean + lf_amp sin(2 pi f_lf t) + hf_amp sin(2 pi f_hf t) + N(0, jitter),
/// clamped to [300, 2000] ms, with t the start of the beat. Beats continue while
/// the cumulative time stays within duration_s. Deterministic per seed.
std::unique_ptr<PacketStream> synthetic_stream(const SourceDescriptor& descriptor);

std::unique_ptr<PacketStream> open_stream(const SourceDescriptor& descriptor);

/// Beat sequence the synthetic generator produces, before quantisation.
std::vector<double> synthetic_rr(const SyntheticProfile& profile, std::uint64_t seed, double duration_s);

/// Drains a stream and decodes every payload.
std::vector<wire::HrmPacket> drain(PacketStream& stream);

}  // namespace shesop::sources
