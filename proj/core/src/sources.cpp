#include "shesop/sources.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <system_error>

#include "shesop/error.hpp"

namespace shesop::sources {

std::string_view to_string(SourceKind kind) noexcept {
  return kind == SourceKind::replay ? "replay" : "synthetic";
}

std::string_view to_string(ProfileKind kind) noexcept {
  switch (kind) {
    case ProfileKind::rest: return "rest";
    case ProfileKind::stress: return "stress";
    case ProfileKind::influenza: return "influenza";
  }
  return "rest";
}

ProfileKind profile_from_string(std::string_view name) {
  if (name == "rest") return ProfileKind::rest;
  if (name == "stress") return ProfileKind::stress;
  if (name == "influenza") return ProfileKind::influenza;
  throw Error(ErrorCode::InvalidArgument, "unknown profile '" + std::string(name) + "'");
}

SyntheticProfile SyntheticProfile::preset(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::rest: return {1000.0, 20.0, 40.0, 15.0};
    case ProfileKind::stress: return {700.0, 35.0, 8.0, 5.0};
    // Training fixture for the influenza model only: elevated rate, depressed
    // vagal modulation, irregular beat-to-beat noise. Not offered as a device.
    case ProfileKind::influenza: return {620.0, 10.0, 6.0, 25.0};
  }
  return {1000.0, 20.0, 40.0, 15.0};
}

void SyntheticProfile::validate() const {
  if (lf_amp_ms < 0 || hf_amp_ms < 0 || jitter_ms < 0) {
    throw Error(ErrorCode::InvalidArgument, "profile amplitudes must be >= 0");
  }
  if (!(mean_rr_ms >= 300.0 && mean_rr_ms <= 2000.0)) {
    throw Error(ErrorCode::InvalidArgument, "profile mean_rr must lie in [300, 2000] ms");
  }
}

void SourceDescriptor::validate() const {
  if (!(speed > 0.0) || !std::isfinite(speed)) throw Error(ErrorCode::InvalidArgument, "speed must be > 0");
  if (kind == SourceKind::synthetic) {
    if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
      throw Error(ErrorCode::InvalidArgument, "duration_s must be > 0");
    }
    if (notify_interval_s < 0.0) throw Error(ErrorCode::InvalidArgument, "notify_interval_s must be >= 0");
  }
}

SourceDescriptor SourceDescriptor::synthetic(ProfileKind profile, std::uint64_t seed, double duration_s,
                                             double speed) {
  SourceDescriptor d;
  d.kind = SourceKind::synthetic;
  d.name = "synthetic:" + std::string(to_string(profile));
  d.profile = profile;
  d.seed = seed;
  d.duration_s = duration_s;
  d.speed = speed;
  return d;
}

SourceDescriptor SourceDescriptor::replay(std::filesystem::path path, double speed) {
  SourceDescriptor d;
  d.kind = SourceKind::replay;
  d.name = "replay:" + path.string();
  d.path = std::move(path);
  d.speed = speed;
  return d;
}

SourceDescriptor parse_source_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::SourceUnavailable, "unknown source '" + spec + "'");
  const std::string kind = spec.substr(0, colon);
  const std::string arg = spec.substr(colon + 1);
  if (kind == "replay" && !arg.empty()) return SourceDescriptor::replay(arg);
  if (kind == "synthetic") {
    if (arg == "rest") return SourceDescriptor::synthetic(ProfileKind::rest, 42, 607.0);
    if (arg == "stress") return SourceDescriptor::synthetic(ProfileKind::stress, 42, 607.0);
  }
  throw Error(ErrorCode::SourceUnavailable, "unknown source '" + spec + "'");
}

SourceListing list_sources(const SourceConfig& config) {
  SourceListing out;
  if (config.replay_dir) {
    std::error_code ec;
    std::vector<std::filesystem::path> files;
    std::filesystem::directory_iterator it(*config.replay_dir, ec);
    if (ec) {
      out.diagnostics.push_back("replay directory " + config.replay_dir->string() + ": " + ec.message());
    } else {
      for (const auto& entry : it) {
        if (entry.path().extension() == ".csv" && entry.is_regular_file(ec)) files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      for (auto& f : files) out.sources.push_back(SourceDescriptor::replay(std::move(f)));
    }
  }
  for (auto kind : {ProfileKind::rest, ProfileKind::stress}) {
    out.sources.push_back(
        SourceDescriptor::synthetic(kind, config.synthetic_seed, config.synthetic_duration_s));
  }
  return out;
}

void check_available(const SourceDescriptor& descriptor) {
  try {
    descriptor.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::SourceUnavailable, e.detail());
  }
  if (descriptor.kind == SourceKind::replay) {
    std::ifstream probe(descriptor.path);
    if (!probe) throw Error(ErrorCode::SourceUnavailable, "cannot open " + descriptor.path.string());
  } else if (descriptor.profile == ProfileKind::influenza) {
    throw Error(ErrorCode::SourceUnavailable, "influenza profile is a training fixture, not a device");
  }
}

wire::HrmPacket beat_packet(double rr_ms) {
  const double hr = std::clamp(std::round(60000.0 / rr_ms), 0.0, 65535.0);
  return wire::make_packet(static_cast<std::uint16_t>(hr), {wire::rr_ms_to_raw(rr_ms)});
}

namespace {

class ReplayStream final : public PacketStream {
 public:
  explicit ReplayStream(RrSeries series) : series_(std::move(series)) {}

  std::optional<Notification> next() override {
    if (index_ >= series_.size()) return std::nullopt;
    const double rr = series_.beats[index_++].rr_ms;
    clock_ms_ += rr;
    return Notification{wire::encode_packet(beat_packet(rr)), clock_ms_ / 1000.0};
  }

 private:
  RrSeries series_;
  std::size_t index_ = 0;
  double clock_ms_ = 0.0;
};

class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    // Box-Muller on (0, 1] uniforms built from the top 53 bits.
    const double u1 = (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(theta);
    return radius * std::cos(theta);
  }

 private:
  std::mt19937_64 rng_;
  std::optional<double> spare_;
};

class SyntheticStream final : public PacketStream {
 public:
  SyntheticStream(std::vector<double> rr, double interval_s) : rr_(std::move(rr)), interval_s_(interval_s) {
    ends_s_.reserve(rr_.size());
    double clock_ms = 0.0;
    for (double v : rr_) {
      clock_ms += v;
      ends_s_.push_back(clock_ms / 1000.0);
    }
    hr_ = rr_.empty() ? 60 : static_cast<std::uint16_t>(std::round(60000.0 / rr_.front()));
  }

  std::optional<Notification> next() override {
    if (index_ >= rr_.size()) return std::nullopt;
    if (interval_s_ <= 0.0) {
      const double at = ends_s_[index_];
      return Notification{wire::encode_packet(beat_packet(rr_[index_++])), at};
    }
    ++tick_;
    const double at = interval_s_ * static_cast<double>(tick_);
    std::vector<std::uint16_t> raw;
    while (index_ < rr_.size() && ends_s_[index_] <= at) {
      raw.push_back(wire::rr_ms_to_raw(rr_[index_]));
      hr_ = static_cast<std::uint16_t>(std::round(60000.0 / rr_[index_]));
      ++index_;
    }
    return Notification{wire::encode_packet(wire::make_packet(hr_, std::move(raw))), at};
  }

 private:
  std::vector<double> rr_;
  std::vector<double> ends_s_;
  double interval_s_;
  std::size_t index_ = 0;
  std::uint64_t tick_ = 0;
  std::uint16_t hr_;
};

}  // namespace

std::unique_ptr<PacketStream> open_replay(const SourceDescriptor& descriptor) {
  auto series = load_rr_csv(descriptor.path.string());
  return std::make_unique<ReplayStream>(std::move(series));
}

std::vector<double> synthetic_rr(const SyntheticProfile& profile, std::uint64_t seed, double duration_s) {
  profile.validate();
  Gaussian noise(seed);
  std::vector<double> rr;
  double t_s = 0.0;
  const double w_lf = 2.0 * std::numbers::pi * profile.lf_freq_hz;
  const double w_hf = 2.0 * std::numbers::pi * profile.hf_freq_hz;
  for (;;) {
    double v = profile.mean_rr_ms + profile.lf_amp_ms * std::sin(w_lf * t_s) +
               profile.hf_amp_ms * std::sin(w_hf * t_s) + profile.jitter_ms * noise();
    v = std::clamp(v, 300.0, 2000.0);
    if (t_s + v / 1000.0 > duration_s) break;
    rr.push_back(v);
    t_s += v / 1000.0;
  }
  return rr;
}

std::unique_ptr<PacketStream> synthetic_stream(const SourceDescriptor& descriptor) {
  descriptor.validate();
  auto rr = synthetic_rr(SyntheticProfile::preset(descriptor.profile), descriptor.seed, descriptor.duration_s);
  return std::make_unique<SyntheticStream>(std::move(rr), descriptor.notify_interval_s);
}

std::unique_ptr<PacketStream> open_stream(const SourceDescriptor& descriptor) {
  descriptor.validate();
  return descriptor.kind == SourceKind::replay ? open_replay(descriptor) : synthetic_stream(descriptor);
}

std::vector<wire::HrmPacket> drain(PacketStream& stream) {
  std::vector<wire::HrmPacket> out;
  while (auto n = stream.next()) out.push_back(wire::decode_packet(n->payload));
  return out;
}

}  // namespace shesop::sources
