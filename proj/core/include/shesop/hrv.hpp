#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "shesop/rr_series.hpp"

namespace shesop::hrv {

struct TimeDomain {
  double mean_rr_ms = 0.0;
  double sdnn_ms = 0.0;   // sample convention, divisor N-1
  double rmssd_ms = 0.0;  // root of the plain mean over the N-1 squared differences
  double pnn50_pct = 0.0; // strict |diff| > 50 ms
  double mean_hr_bpm = 0.0;

  friend bool operator==(const TimeDomain&, const TimeDomain&) = default;
};

/// Throws Error{TooFewBeats} below 2 beats.
TimeDomain time_domain(const RrSeries& series);

struct Band {
  double lo_hz;
  double hi_hz;
};

inline constexpr Band kVlfBand{0.003, 0.04};
inline constexpr Band kLfBand{0.04, 0.15};
inline constexpr Band kHfBand{0.15, 0.4};

struct Psd {
  std::vector<double> freq_hz;
  std::vector<double> power;  // ms^2/Hz

  friend bool operator==(const Psd&, const Psd&) = default;
};

/// `points` frequencies spaced uniformly over [lo_hz, hi_hz], both ends included.
std::vector<double> uniform_grid(double lo_hz, double hi_hz, std::size_t points);

/// Default analysis grid: 512 points over [0.003, 0.4] Hz.
std::vector<double> default_grid();

/// Lomb-Scargle periodogram of the mean-subtracted RR values at their beat
/// times, scaled to a one-sided PSD so that integrating over frequency
/// recovers the RR variance.
///
/// Throws Error{TooFewBeats} below 4 beats and Error{BadGrid} unless the grid
/// is non-empty, strictly increasing and inside (0, 0.5] Hz.
Psd lomb_scargle_psd(const RrSeries& series, const std::vector<double>& grid);

struct FreqDomain {
  double vlf_power_ms2 = 0.0;
  double lf_power_ms2 = 0.0;
  double hf_power_ms2 = 0.0;
  double total_power_ms2 = 0.0;  // vlf + lf + hf
  std::optional<double> lf_hf;   // absent when hf = 0
  std::optional<double> lf_nu;   // absent when lf + hf = 0
  std::optional<double> hf_nu;

  friend bool operator==(const FreqDomain&, const FreqDomain&) = default;
};

/// Trapezoidal integral of the piecewise-linear PSD over [lo, hi].
double integrate_band(const Psd& psd, Band band);

/// Throws Error{GridDoesNotCoverBands} unless the PSD spans [0.003, 0.4] Hz.
FreqDomain band_powers(const Psd& psd);

struct Poincare {
  double sd1_ms = 0.0;
  double sd2_ms = 0.0;
  std::optional<double> sd1_sd2;  // absent when sd2 = 0

  friend bool operator==(const Poincare&, const Poincare&) = default;
};

/// Population-variance convention throughout. Throws Error{TooFewBeats} below 3 beats.
Poincare poincare(const RrSeries& series);

struct Nonlinear {
  std::optional<double> sampen;  // absent ("undefined") when A or B is zero
  int m = 2;
  double r_ms = 0.0;
  std::uint64_t matches_m = 0;       // B
  std::uint64_t matches_m_plus_1 = 0;  // A

  bool defined() const noexcept { return sampen.has_value(); }

  friend bool operator==(const Nonlinear&, const Nonlinear&) = default;
};

/// Sample entropy -ln(A/B). Both counts range over the first N-m templates,
/// unordered pairs, self-matches excluded, Chebyshev distance <= r.
///
/// Throws Error{TooFewBeats} when N < m + 2 and Error{NonpositiveTolerance}
/// when r <= 0.
Nonlinear sample_entropy(const RrSeries& series, int m, double r_ms);

struct ReportConfig {
  std::size_t min_beats = 60;
  std::size_t grid_points = 512;
  double grid_lo_hz = kVlfBand.lo_hz;
  double grid_hi_hz = kHfBand.hi_hz;
  int sampen_m = 2;
  double sampen_r_fraction = 0.2;  // of sdnn
  double sampen_r_floor_ms = 1.0;
};

struct Window {
  double start_s = 0.0;
  double end_s = 0.0;
  std::size_t beat_count = 0;

  double duration_s() const noexcept { return end_s - start_s; }

  friend bool operator==(const Window&, const Window&) = default;
};

struct HrvReport {
  Window window;
  TimeDomain time;
  FreqDomain freq;
  Poincare poincare;
  Nonlinear nonlinear;

  friend bool operator==(const HrvReport&, const HrvReport&) = default;
};

/// Window starts at the R peak preceding the first beat (t - rr) and ends at
/// the last beat. Throws Error{TooFewBeats} below config.min_beats and
/// propagates component errors.
HrvReport compute_report(const RrSeries& series, const ReportConfig& config = {});

}  // namespace shesop::hrv
