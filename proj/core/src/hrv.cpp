#include "shesop/hrv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "shesop/error.hpp"

namespace shesop::hrv {
namespace {

void require_beats(const RrSeries& series, std::size_t needed, const char* what) {
  if (series.size() < needed) {
    throw Error(ErrorCode::TooFewBeats, std::string(what) + " needs " + std::to_string(needed) +
                                            " beats, got " + std::to_string(series.size()));
  }
}

// Mean taken relative to the first value: a constant input yields its value exactly.
double shifted_mean(const std::vector<double>& x) {
  const double x0 = x.front();
  double acc = 0.0;
  for (double v : x) acc += v - x0;
  return x0 + acc / static_cast<double>(x.size());
}

double sum_sq_dev(const std::vector<double>& x, double mean) {
  double acc = 0.0;
  for (double v : x) acc += (v - mean) * (v - mean);
  return acc;
}

std::vector<double> successive_diffs(const std::vector<double>& x) {
  std::vector<double> d;
  d.reserve(x.size() - 1);
  for (std::size_t i = 1; i < x.size(); ++i) d.push_back(x[i] - x[i - 1]);
  return d;
}

}  // namespace

TimeDomain time_domain(const RrSeries& series) {
  require_beats(series, 2, "time_domain");
  const auto rr = series.rr_values();
  const double n = static_cast<double>(rr.size());

  TimeDomain td;
  td.mean_rr_ms = shifted_mean(rr);
  td.sdnn_ms = std::sqrt(sum_sq_dev(rr, td.mean_rr_ms) / (n - 1.0));

  const auto d = successive_diffs(rr);
  double sq = 0.0;
  std::size_t over50 = 0;
  for (double v : d) {
    sq += v * v;
    if (std::abs(v) > 50.0) ++over50;
  }
  const double nd = static_cast<double>(d.size());
  td.rmssd_ms = std::sqrt(sq / nd);
  td.pnn50_pct = 100.0 * static_cast<double>(over50) / nd;
  td.mean_hr_bpm = 60000.0 / td.mean_rr_ms;
  return td;
}

std::vector<double> uniform_grid(double lo_hz, double hi_hz, std::size_t points) {
  std::vector<double> grid;
  if (points == 0) return grid;
  if (points == 1) return {lo_hz};
  grid.reserve(points);
  const double step = (hi_hz - lo_hz) / static_cast<double>(points - 1);
  for (std::size_t k = 0; k + 1 < points; ++k) grid.push_back(lo_hz + step * static_cast<double>(k));
  grid.push_back(hi_hz);
  return grid;
}

std::vector<double> default_grid() { return uniform_grid(kVlfBand.lo_hz, kHfBand.hi_hz, 512); }

Psd lomb_scargle_psd(const RrSeries& series, const std::vector<double>& grid) {
  require_beats(series, 4, "lomb_scargle_psd");
  if (grid.empty()) throw Error(ErrorCode::BadGrid, "empty grid");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] > 0.0 && grid[k] <= 0.5)) throw Error(ErrorCode::BadGrid, "frequency outside (0, 0.5] Hz");
    if (k > 0 && !(grid[k] > grid[k - 1])) throw Error(ErrorCode::BadGrid, "grid not strictly increasing");
  }

  const auto rr = series.rr_values();
  const auto t = series.times();
  const std::size_t n = rr.size();
  const double mean = shifted_mean(rr);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = rr[i] - mean;

  // Unnormalised periodogram P has units ms^2; 2 * P * dt is a one-sided PSD
  // whose integral is the variance (exact for even sampling at Fourier frequencies).
  const double dt = (t.back() - t.front()) / static_cast<double>(n - 1);
  const double half_n = 0.5 * static_cast<double>(n);

  Psd psd;
  psd.freq_hz = grid;
  psd.power.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double w = 2.0 * std::numbers::pi * grid[k];
    double yc = 0.0, ys = 0.0, c2 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = std::cos(w * t[i]);
      const double s = std::sin(w * t[i]);
      yc += y[i] * c;
      ys += y[i] * s;
      c2 += c * c - s * s;
      s2 += 2.0 * s * c;
    }
    // tau rotates the time origin so the sine and cosine terms decouple.
    const double two_wtau = std::atan2(s2, c2);
    const double cos_wtau = std::cos(0.5 * two_wtau);
    const double sin_wtau = std::sin(0.5 * two_wtau);
    const double cos_2wtau = std::cos(two_wtau);
    const double sin_2wtau = std::sin(two_wtau);

    const double ycos = yc * cos_wtau + ys * sin_wtau;
    const double ysin = ys * cos_wtau - yc * sin_wtau;
    const double rot = c2 * cos_2wtau + s2 * sin_2wtau;
    const double cc = half_n + 0.5 * rot;
    const double ss = half_n - 0.5 * rot;

    double p = 0.0;
    const double eps = 1e-12 * static_cast<double>(n);
    if (cc > eps) p += ycos * ycos / cc;
    if (ss > eps) p += ysin * ysin / ss;
    psd.power[k] = std::max(0.0, p * dt);  // 2 * (p / 2) * dt
  }
  return psd;
}

double integrate_band(const Psd& psd, Band band) {
  const auto& f = psd.freq_hz;
  const auto& p = psd.power;
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < f.size(); ++k) {
    const double a = std::max(f[k], band.lo_hz);
    const double b = std::min(f[k + 1], band.hi_hz);
    if (!(b > a)) continue;
    const double width = f[k + 1] - f[k];
    const double slope = (p[k + 1] - p[k]) / width;
    const double pa = p[k] + slope * (a - f[k]);
    const double pb = p[k] + slope * (b - f[k]);
    area += 0.5 * (pa + pb) * (b - a);
  }
  return area;
}

FreqDomain band_powers(const Psd& psd) {
  constexpr double kEdgeSlack = 1e-12;
  if (psd.freq_hz.size() < 2 || psd.freq_hz.size() != psd.power.size() ||
      psd.freq_hz.front() > kVlfBand.lo_hz + kEdgeSlack ||
      psd.freq_hz.back() < kHfBand.hi_hz - kEdgeSlack) {
    throw Error(ErrorCode::GridDoesNotCoverBands, "PSD must span [0.003, 0.4] Hz");
  }
  FreqDomain fd;
  fd.vlf_power_ms2 = integrate_band(psd, kVlfBand);
  fd.lf_power_ms2 = integrate_band(psd, kLfBand);
  fd.hf_power_ms2 = integrate_band(psd, kHfBand);
  fd.total_power_ms2 = fd.vlf_power_ms2 + fd.lf_power_ms2 + fd.hf_power_ms2;
  if (fd.hf_power_ms2 > 0.0) fd.lf_hf = fd.lf_power_ms2 / fd.hf_power_ms2;
  const double lf_plus_hf = fd.lf_power_ms2 + fd.hf_power_ms2;
  if (lf_plus_hf > 0.0) {
    fd.lf_nu = 100.0 * fd.lf_power_ms2 / lf_plus_hf;
    fd.hf_nu = 100.0 * fd.hf_power_ms2 / lf_plus_hf;
  }
  return fd;
}

Poincare poincare(const RrSeries& series) {
  require_beats(series, 3, "poincare");
  const auto rr = series.rr_values();
  const auto d = successive_diffs(rr);
  const double var_d = sum_sq_dev(d, shifted_mean(d)) / static_cast<double>(d.size());
  const double var_rr = sum_sq_dev(rr, shifted_mean(rr)) / static_cast<double>(rr.size());

  Poincare pc;
  pc.sd1_ms = std::sqrt(var_d / 2.0);
  pc.sd2_ms = std::sqrt(std::max(0.0, 2.0 * var_rr - pc.sd1_ms * pc.sd1_ms));
  if (pc.sd2_ms > 0.0) pc.sd1_sd2 = pc.sd1_ms / pc.sd2_ms;
  return pc;
}

Nonlinear sample_entropy(const RrSeries& series, int m, double r_ms) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "template length m must be >= 1");
  require_beats(series, static_cast<std::size_t>(m) + 2, "sample_entropy");
  if (!(r_ms > 0.0)) throw Error(ErrorCode::NonpositiveTolerance, "r must be > 0");

  const auto x = series.rr_values();
  const std::size_t mm = static_cast<std::size_t>(m);
  const std::size_t templates = x.size() - mm;

  Nonlinear ne;
  ne.m = m;
  ne.r_ms = r_ms;
  for (std::size_t i = 0; i + 1 < templates; ++i) {
    for (std::size_t j = i + 1; j < templates; ++j) {
      bool match = true;
      for (std::size_t k = 0; k < mm; ++k) {
        if (std::abs(x[i + k] - x[j + k]) > r_ms) {
          match = false;
          break;
        }
      }
      if (!match) continue;
      ++ne.matches_m;
      if (std::abs(x[i + mm] - x[j + mm]) <= r_ms) ++ne.matches_m_plus_1;
    }
  }
  if (ne.matches_m > 0 && ne.matches_m_plus_1 > 0) {
    ne.sampen = -std::log(static_cast<double>(ne.matches_m_plus_1) /
                          static_cast<double>(ne.matches_m));
  }
  return ne;
}

HrvReport compute_report(const RrSeries& series, const ReportConfig& config) {
  series.validate();
  require_beats(series, std::max<std::size_t>(config.min_beats, 4), "compute_report");

  HrvReport report;
  report.window.start_s = series.beats.front().t_s - series.beats.front().rr_ms / 1000.0;
  report.window.end_s = series.beats.back().t_s;
  report.window.beat_count = series.size();

  report.time = time_domain(series);
  const auto grid = uniform_grid(config.grid_lo_hz, config.grid_hi_hz, config.grid_points);
  report.freq = band_powers(lomb_scargle_psd(series, grid));
  report.poincare = poincare(series);
  const double r = std::max(config.sampen_r_fraction * report.time.sdnn_ms, config.sampen_r_floor_ms);
  report.nonlinear = sample_entropy(series, config.sampen_m, r);
  return report;
}

}  // namespace shesop::hrv
