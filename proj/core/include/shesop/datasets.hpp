#pragma once

// Synthetic feature datasets and the reference models trained on them.
// These models separate the generating profiles and nothing more: they are
// NON-CLINICAL.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "shesop/hrv.hpp"
#include "shesop/rr_series.hpp"
#include "shesop/sources.hpp"
#include "shesop/svm.hpp"

namespace shesop::datasets {

struct FeatureRow {
  std::string label;  // generating profile name
  std::vector<double> values;

  friend bool operator==(const FeatureRow&, const FeatureRow&) = default;
};

struct FeatureTable {
  std::vector<std::string> names;
  std::vector<FeatureRow> rows;

  friend bool operator==(const FeatureTable&, const FeatureTable&) = default;
};

/// Ectopic filtering followed by the report.
/// Throws whatever the stages throw.
hrv::HrvReport analyze_rr(const RrSeries& series, const CleanConfig& clean = {},
                          const hrv::ReportConfig& report = {});

/// One recording of `profile` streamed as packets and analysed.
hrv::HrvReport simulate_report(sources::ProfileKind profile, std::uint64_t seed, double duration_s);

/// Seed of sample `index` of `profile` in a dataset seeded with `base_seed`.
/// Distinct for every (profile, index) pair.
std::uint64_t sample_seed(std::uint64_t base_seed, sources::ProfileKind profile, std::size_t index);

struct DatasetConfig {
  std::vector<sources::ProfileKind> profiles{sources::ProfileKind::rest, sources::ProfileKind::stress};
  std::size_t per_profile = 100;
  std::uint64_t seed = 7;
  double duration_s = 300.0;
  std::vector<std::string> features = svm::default_feature_names();
};

/// Rows grouped by profile in `profiles` order.
FeatureTable generate_dataset(const DatasetConfig& config);

/// Header `label,<feature names>`, one sample per row.
void write_features_csv(std::ostream& out, const FeatureTable& table);
/// Throws Error{ParseError} with the line number.
FeatureTable read_features_csv(std::istream& in);
/// Throws Error{FileNotFound} or Error{ParseError}.
FeatureTable load_features_csv(const std::string& path);
void save_features_csv(const std::string& path, const FeatureTable& table);

/// Rows labelled `positive` get +1, everything else -1.
std::vector<svm::Sample> to_samples(const FeatureTable& table, const std::vector<std::string>& positive);

/// Stress: stress vs rest. Influenza: influenza vs rest and stress.
struct ReferenceModels {
  svm::SvmModel stress;
  svm::SvmModel influenza;
};

ReferenceModels train_reference_models(std::uint64_t seed = 7, std::size_t per_profile = 40,
                                       double duration_s = 300.0);

}  // namespace shesop::datasets
