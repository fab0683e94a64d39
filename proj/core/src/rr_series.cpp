#include "shesop/rr_series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include "shesop/error.hpp"

namespace shesop {

std::vector<double> RrSeries::rr_values() const {
  std::vector<double> v;
  v.reserve(beats.size());
  for (const auto& b : beats) v.push_back(b.rr_ms);
  return v;
}

std::vector<double> RrSeries::times() const {
  std::vector<double> v;
  v.reserve(beats.size());
  for (const auto& b : beats) v.push_back(b.t_s);
  return v;
}

void RrSeries::validate() const {
  for (std::size_t i = 0; i < beats.size(); ++i) {
    if (!(beats[i].rr_ms > 0.0) || !std::isfinite(beats[i].rr_ms)) {
      throw Error(ErrorCode::InvalidArgument, "beat " + std::to_string(i) + " has rr <= 0");
    }
    if (!std::isfinite(beats[i].t_s) || (i > 0 && !(beats[i].t_s > beats[i - 1].t_s))) {
      throw Error(ErrorCode::InvalidArgument,
                  "beat " + std::to_string(i) + " timestamp not strictly increasing");
    }
  }
}

RrSeries series_from_rr(std::span<const double> rr_ms, std::string source_id) {
  RrSeries s;
  s.source_id = std::move(source_id);
  s.beats.reserve(rr_ms.size());
  double clock = 0.0;
  for (double rr : rr_ms) {
    clock += rr;
    s.beats.push_back({clock / 1000.0, rr});
  }
  return s;
}

RrAccumulator::RrAccumulator(std::string source_id) { series_.source_id = std::move(source_id); }

std::size_t RrAccumulator::push(const wire::HrmPacket& packet) {
  std::size_t added = 0;
  for (auto raw : packet.rr_raw) {
    // A zero interval carries no beat and would break strict time ordering.
    if (raw == 0) continue;
    const double rr = wire::rr_raw_to_ms(raw);
    clock_ms_ += rr;
    series_.beats.push_back({clock_ms_ / 1000.0, rr});
    ++added;
  }
  return added;
}

RrSeries accumulate(std::span<const wire::HrmPacket> packets, std::string source_id) {
  RrAccumulator acc(std::move(source_id));
  for (const auto& p : packets) acc.push(p);
  return std::move(acc).take();
}

void CleanConfig::validate() const {
  if (!(min_rr_ms > 0.0 && min_rr_ms < max_rr_ms)) {
    throw Error(ErrorCode::InvalidArgument, "require 0 < min_rr_ms < max_rr_ms");
  }
  if (!(ectopic_rel_threshold > 0.0 && ectopic_rel_threshold < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "ectopic_rel_threshold must lie in (0, 1)");
  }
  if (median_window < 3 || median_window % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "median_window must be odd and >= 3");
  }
}

namespace {

double median_of(std::vector<double>& scratch) {
  const std::size_t n = scratch.size();
  const auto mid = scratch.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(scratch.begin(), mid, scratch.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(scratch.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

FilterResult filter_ectopic(const RrSeries& series, const CleanConfig& config) {
  config.validate();
  const std::size_t n = series.size();
  const std::size_t window = std::min(config.median_window, n);
  const std::size_t half = config.median_window / 2;

  FilterResult result;
  result.series.source_id = series.source_id;
  result.series.beats.reserve(n);

  std::vector<double> scratch;
  scratch.reserve(window);
  for (std::size_t i = 0; i < n; ++i) {
    const double rr = series.beats[i].rr_ms;
    bool keep = rr >= config.min_rr_ms && rr <= config.max_rr_ms;
    if (keep) {
      std::size_t lo = i > half ? i - half : 0;
      lo = std::min(lo, n - window);
      scratch.clear();
      for (std::size_t k = lo; k < lo + window; ++k) scratch.push_back(series.beats[k].rr_ms);
      const double med = median_of(scratch);
      keep = std::abs(rr - med) <= config.ectopic_rel_threshold * med;
    }
    if (keep) {
      result.series.beats.push_back(series.beats[i]);
    } else {
      ++result.removed_count;
    }
  }

  if (n > 0 && result.series.empty()) {
    throw Error(ErrorCode::AllBeatsRejected, std::to_string(n) + " beats, none survived");
  }
  return result;
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

void write_rr_csv(std::ostream& out, const RrSeries& series) {
  out << "t_s,rr_ms\n";
  for (const auto& b : series.beats) {
    out << format_double(b.t_s) << ',' << format_double(b.rr_ms) << '\n';
  }
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& why) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + why);
}

}  // namespace

RrSeries read_rr_csv(std::istream& in, std::string source_id) {
  RrSeries s;
  s.source_id = std::move(source_id);
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim(line);
    if (lineno == 1 && view.size() >= 3 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
    if (view.empty()) continue;
    if (!header_seen) {
      if (view != "t_s,rr_ms") parse_fail(lineno, "expected header 't_s,rr_ms'");
      header_seen = true;
      continue;
    }
    const auto comma = view.find(',');
    if (comma == std::string_view::npos || view.find(',', comma + 1) != std::string_view::npos) {
      parse_fail(lineno, "expected two comma-separated fields");
    }
    Beat b;
    if (!parse_double(view.substr(0, comma), b.t_s)) parse_fail(lineno, "bad t_s");
    if (!parse_double(view.substr(comma + 1), b.rr_ms)) parse_fail(lineno, "bad rr_ms");
    if (!(b.rr_ms > 0.0)) parse_fail(lineno, "rr_ms must be positive");
    if (!s.beats.empty() && !(b.t_s > s.beats.back().t_s)) {
      parse_fail(lineno, "t_s must be strictly increasing");
    }
    s.beats.push_back(b);
  }
  return s;
}

RrSeries load_rr_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, path);
  return read_rr_csv(in, path);
}

void save_rr_csv(const std::string& path, const RrSeries& series) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  write_rr_csv(out, series);
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

}  // namespace shesop
