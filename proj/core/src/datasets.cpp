#include "shesop/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "shesop/error.hpp"

namespace shesop::datasets {

hrv::HrvReport analyze_rr(const RrSeries& series, const CleanConfig& clean, const hrv::ReportConfig& report) {
  return hrv::compute_report(filter_ectopic(series, clean).series, report);
}

hrv::HrvReport simulate_report(sources::ProfileKind profile, std::uint64_t seed, double duration_s) {
  auto desc = sources::SourceDescriptor::synthetic(profile, seed, duration_s);
  auto stream = sources::synthetic_stream(desc);
  const auto packets = sources::drain(*stream);
  return analyze_rr(accumulate(packets, desc.name));
}

std::uint64_t sample_seed(std::uint64_t base_seed, sources::ProfileKind profile, std::size_t index) {
  // splitmix64 finalizer over a packed key; the packing alone is already unique
  std::uint64_t z = base_seed * 0x9E3779B97F4A7C15ull + (static_cast<std::uint64_t>(profile) << 40) + index;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

FeatureTable generate_dataset(const DatasetConfig& config) {
  FeatureTable table;
  table.names = config.features;
  table.rows.reserve(config.profiles.size() * config.per_profile);
  for (auto profile : config.profiles) {
    for (std::size_t i = 0; i < config.per_profile; ++i) {
      const auto report = simulate_report(profile, sample_seed(config.seed, profile, i), config.duration_s);
      auto fv = svm::extract_features(report, config.features);
      table.rows.push_back({std::string(sources::to_string(profile)), std::move(fv.values)});
    }
  }
  return table;
}

void write_features_csv(std::ostream& out, const FeatureTable& table) {
  out << "label";
  for (const auto& n : table.names) out << ',' << n;
  out << '\n';
  for (const auto& row : table.rows) {
    out << row.label;
    for (double v : row.values) out << ',' << format_double(v);
    out << '\n';
  }
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void bad_line(std::size_t line, const std::string& why) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + why);
}

}  // namespace

FeatureTable read_features_csv(std::istream& in) {
  FeatureTable table;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line);
    if (!header_seen) {
      if (fields.size() < 2 || fields[0] != "label") bad_line(lineno, "expected header 'label,<features>'");
      for (std::size_t i = 1; i < fields.size(); ++i) {
        if (fields[i].empty()) bad_line(lineno, "empty feature name");
        table.names.emplace_back(fields[i]);
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != table.names.size() + 1) {
      bad_line(lineno, "expected " + std::to_string(table.names.size() + 1) + " fields");
    }
    if (fields[0].empty()) bad_line(lineno, "empty label");
    FeatureRow row;
    row.label = std::string(fields[0]);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(fields[i].data(), fields[i].data() + fields[i].size(), v);
      if (ec != std::errc{} || ptr != fields[i].data() + fields[i].size() || !std::isfinite(v)) {
        bad_line(lineno, "bad value for " + table.names[i - 1]);
      }
      row.values.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (!header_seen) throw Error(ErrorCode::ParseError, "line 1: missing header");
  return table;
}

FeatureTable load_features_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, path);
  return read_features_csv(in);
}

void save_features_csv(const std::string& path, const FeatureTable& table) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  write_features_csv(out, table);
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

std::vector<svm::Sample> to_samples(const FeatureTable& table, const std::vector<std::string>& positive) {
  std::vector<svm::Sample> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const bool pos = std::find(positive.begin(), positive.end(), row.label) != positive.end();
    out.push_back({{table.names, row.values}, pos ? 1 : -1});
  }
  return out;
}

ReferenceModels train_reference_models(std::uint64_t seed, std::size_t per_profile, double duration_s) {
  using sources::ProfileKind;
  DatasetConfig cfg;
  cfg.profiles = {ProfileKind::rest, ProfileKind::stress, ProfileKind::influenza};
  cfg.per_profile = per_profile;
  cfg.seed = seed;
  cfg.duration_s = duration_s;
  const auto all = generate_dataset(cfg);

  FeatureTable rest_stress{all.names, {}};
  for (const auto& row : all.rows) {
    if (row.label != "influenza") rest_stress.rows.push_back(row);
  }

  svm::TrainConfig stress_cfg;
  stress_cfg.seed = seed;
  stress_cfg.negative_label = "not_stressed";
  stress_cfg.positive_label = "stressed";
  svm::TrainConfig flu_cfg = stress_cfg;
  flu_cfg.negative_label = "no_influenza";
  flu_cfg.positive_label = "influenza";

  return {svm::train_smo(to_samples(rest_stress, {"stress"}), stress_cfg),
          svm::train_smo(to_samples(all, {"influenza"}), flu_cfg)};
}

}  // namespace shesop::datasets
