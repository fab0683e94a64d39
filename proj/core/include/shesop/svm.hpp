#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shesop/hrv.hpp"

namespace shesop::svm {

struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;

  /// Throws Error{InconsistentFeatures} on length mismatch, duplicate names or
  /// non-finite values.
  void validate() const;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Per-feature z-score transform.
struct Scaler {
  static constexpr double kStdFloor = 1e-12;

  std::vector<double> mean;
  std::vector<double> stddev;

  static Scaler fit(const std::vector<std::vector<double>>& rows);
  std::vector<double> transform(const std::vector<double>& x) const;
  std::vector<double> inverse(const std::vector<double>& z) const;

  friend bool operator==(const Scaler&, const Scaler&) = default;
};

struct Kernel {
  enum class Type { linear, rbf };
  Type type = Type::rbf;
  double gamma = 1.0;  // rbf only

  static Kernel linear() { return {Type::linear, 0.0}; }
  static Kernel rbf(double gamma) { return {Type::rbf, gamma}; }

  double operator()(const std::vector<double>& a, const std::vector<double>& b) const;

  friend bool operator==(const Kernel&, const Kernel&) = default;
};

struct SvmModel {
  Kernel kernel;
  std::vector<std::vector<double>> support_vectors;  // in scaled space
  std::vector<double> dual_coefs;                    // alpha_i * y_i
  double bias = 0.0;
  Scaler scaler;
  std::string negative_label = "negative";
  std::string positive_label = "positive";
  std::vector<std::string> feature_names;
  double C = 1.0;
  bool converged = true;

  friend bool operator==(const SvmModel&, const SvmModel&) = default;
};

struct TrainConfig {
  double C = 1.0;
  double tol = 1e-3;
  int max_passes = 10;
  /// Unset means rbf with gamma = 1 / num_features.
  std::optional<Kernel> kernel;
  std::uint64_t seed = 0;
  /// Hard cap on full sweeps over the training set.
  std::size_t max_sweeps = 10000;
  std::string negative_label = "negative";
  std::string positive_label = "positive";
};

struct Sample {
  FeatureVector x;
  int label = 0;  // -1 or +1
};

/// Diagnostics of the solution on the training set, in scaled space.
struct TrainReport {
  std::vector<double> alphas;
  double sum_alpha_y = 0.0;
  double max_kkt_residual = 0.0;
  std::size_t sweeps = 0;
};

/// Simplified SMO with a seeded random choice of the second index. When the
/// random partner cannot make progress the remaining indices are tried from a
/// random offset before the point is given up for the sweep.
///
/// Throws Error{SingleClass} or Error{InconsistentFeatures}. A run that ends
/// with KKT violations above tol returns a model with converged = false.
SvmModel train_smo(const std::vector<Sample>& data, const TrainConfig& config = {},
                   TrainReport* report = nullptr);

/// KKT residual of a point with multiplier alpha, label y and decision value f.
double kkt_residual(double alpha, int y, double f, double C);

/// sum_i coef_i K(sv_i, scale(x)) + bias. Throws Error{InconsistentFeatures}.
double decision_value(const SvmModel& model, const FeatureVector& x);

struct Prediction {
  std::string label;
  double score = 0.0;  // |f(x)|, uncalibrated
  bool positive = false;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// Positive label iff f(x) >= 0.
Prediction predict(const SvmModel& model, const FeatureVector& x);

/// mean_rr, sdnn, rmssd, pnn50, lf_power, hf_power, lf_hf, sd1, sd2, sampen.
const std::vector<std::string>& default_feature_names();

/// Throws Error{MissingFeature} when a requested feature is undefined in the
/// report (lf_hf with hf = 0, sd1_sd2 with sd2 = 0, sampen without matches)
/// or unknown.
FeatureVector extract_features(const hrv::HrvReport& report,
                               const std::vector<std::string>& names = default_feature_names());

struct ConditionResult {
  Prediction stress;
  Prediction influenza;

  friend bool operator==(const ConditionResult&, const ConditionResult&) = default;
};

ConditionResult classify_condition(const hrv::HrvReport& report, const SvmModel& stress_model,
                                   const SvmModel& flu_model);

}  // namespace shesop::svm
