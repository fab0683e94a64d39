#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "shesop/hrm_wire.hpp"

namespace shesop {

struct Beat {
  double t_s = 0.0;   // seconds since session start, at the closing R peak
  double rr_ms = 0.0;

  friend bool operator==(const Beat&, const Beat&) = default;
};

/// Time-stamped RR (or NN, once cleaned) sequence.
struct RrSeries {
  std::vector<Beat> beats;
  std::string source_id;

  std::size_t size() const noexcept { return beats.size(); }
  bool empty() const noexcept { return beats.empty(); }
  std::vector<double> rr_values() const;
  std::vector<double> times() const;

  /// Throws Error{InvalidArgument} unless t is strictly increasing and every rr > 0.
  void validate() const;

  friend bool operator==(const RrSeries&, const RrSeries&) = default;
};

/// Builds a series from bare RR values with cumulative timestamps.
RrSeries series_from_rr(std::span<const double> rr_ms, std::string source_id = {});

/// Incremental form of accumulate(): the session engine feeds packets one at a time.
class RrAccumulator {
 public:
  explicit RrAccumulator(std::string source_id = {});

  /// Appends the packet's RR values; returns how many beats were added.
  std::size_t push(const wire::HrmPacket& packet);

  const RrSeries& series() const noexcept { return series_; }
  RrSeries take() && { return std::move(series_); }

 private:
  RrSeries series_;
  double clock_ms_ = 0.0;
};

RrSeries accumulate(std::span<const wire::HrmPacket> packets, std::string source_id = {});

struct CleanConfig {
  double min_rr_ms = 300.0;
  double max_rr_ms = 2000.0;
  double ectopic_rel_threshold = 0.20;
  std::size_t median_window = 5;

  /// Throws Error{InvalidArgument}.
  void validate() const;
};

struct FilterResult {
  RrSeries series;
  std::size_t removed_count = 0;
};

/// Drops beats outside [min_rr_ms, max_rr_ms] or deviating from the median of
/// the surrounding window by more than the relative threshold. The window is
/// centred on the beat and slid inward at the series ends so it always spans
/// median_window input beats (or the whole series when shorter). Medians are
/// taken over the input, so a single pass decides every beat independently.
///
/// Throws Error{AllBeatsRejected} when a non-empty input loses every beat.
FilterResult filter_ectopic(const RrSeries& series, const CleanConfig& config = {});

// RR CSV: header `t_s,rr_ms`, one beat per row, '.' decimal separator.
void write_rr_csv(std::ostream& out, const RrSeries& series);

/// Throws Error{ParseError} naming the 1-based line. An empty stream yields an
/// empty series.
RrSeries read_rr_csv(std::istream& in, std::string source_id = {});

/// Throws Error{FileNotFound} or Error{ParseError}.
RrSeries load_rr_csv(const std::string& path);
void save_rr_csv(const std::string& path, const RrSeries& series);

/// Shortest decimal text that round-trips the double.
std::string format_double(double value);

}  // namespace shesop
