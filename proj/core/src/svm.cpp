#include "shesop/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "shesop/error.hpp"

namespace shesop::svm {

void FeatureVector::validate() const {
  if (names.size() != values.size()) {
    throw Error(ErrorCode::InconsistentFeatures, "names and values differ in length");
  }
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) throw Error(ErrorCode::InconsistentFeatures, "duplicate feature " + n);
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorCode::InconsistentFeatures, "non-finite value for " + names[i]);
    }
  }
}

Scaler Scaler::fit(const std::vector<std::vector<double>>& rows) {
  Scaler s;
  if (rows.empty()) return s;
  const std::size_t d = rows.front().size();
  const double n = static_cast<double>(rows.size());
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t k = 0; k < d; ++k) s.mean[k] += r[k];
  for (auto& m : s.mean) m /= n;
  for (const auto& r : rows)
    for (std::size_t k = 0; k < d; ++k) s.stddev[k] += (r[k] - s.mean[k]) * (r[k] - s.mean[k]);
  for (auto& v : s.stddev) v = std::max(std::sqrt(v / n), kStdFloor);
  return s;
}

std::vector<double> Scaler::transform(const std::vector<double>& x) const {
  std::vector<double> z(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) z[k] = (x[k] - mean[k]) / stddev[k];
  return z;
}

std::vector<double> Scaler::inverse(const std::vector<double>& z) const {
  std::vector<double> x(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) x[k] = z[k] * stddev[k] + mean[k];
  return x;
}

double Kernel::operator()(const std::vector<double>& a, const std::vector<double>& b) const {
  if (type == Type::linear) {
    double dot = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
    return dot;
  }
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d2 += (a[k] - b[k]) * (a[k] - b[k]);
  return std::exp(-gamma * d2);
}

double kkt_residual(double alpha, int y, double f, double C) {
  const double r = y * f - 1.0;
  if (alpha <= 0.0) return std::max(0.0, -r);
  if (alpha >= C) return std::max(0.0, r);
  return std::abs(r);
}

namespace {

class SmoSolver {
 public:
  SmoSolver(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
            const Kernel& kernel, double C, double tol)
      : n_(x.size()), y_(y), C_(C), tol_(tol), alpha_(n_, 0.0), error_(n_), gram_(n_ * n_) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i; j < n_; ++j) gram_[i * n_ + j] = gram_[j * n_ + i] = kernel(x[i], x[j]);
    for (std::size_t i = 0; i < n_; ++i) error_[i] = -static_cast<double>(y_[i]);
  }

  std::size_t run(int max_passes, std::size_t max_sweeps, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n_ - 2);
    int passes = 0;
    std::size_t sweeps = 0;
    while (passes < max_passes && sweeps < max_sweeps) {
      std::size_t changed = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        if (!violates(i)) continue;
        std::size_t j = pick(rng);
        if (j >= i) ++j;
        if (step(i, j)) {
          ++changed;
          continue;
        }
        const std::size_t start = pick(rng);
        for (std::size_t k = 0; k + 1 < n_; ++k) {
          std::size_t jj = (start + k) % (n_ - 1);
          if (jj >= i) ++jj;
          if (jj != j && step(i, jj)) {
            ++changed;
            break;
          }
        }
      }
      ++sweeps;
      passes = changed == 0 ? passes + 1 : 0;
    }
    refresh_errors();
    polish_bias();
    return sweeps;
  }

  const std::vector<double>& alphas() const { return alpha_; }
  double bias() const { return b_; }

  double decision(std::size_t i) const { return error_[i] + y_[i]; }

  double max_residual() const { return max_residual_with(b_); }

 private:
  double k(std::size_t i, std::size_t j) const { return gram_[i * n_ + j]; }

  bool violates(std::size_t i) const {
    const double r = y_[i] * error_[i];
    return (r < -tol_ && alpha_[i] < C_) || (r > tol_ && alpha_[i] > 0.0);
  }

  double snap(double a) const {
    if (a < 1e-12 * C_) return 0.0;
    if (a > C_ * (1.0 - 1e-12)) return C_;
    return a;
  }

  bool step(std::size_t i, std::size_t j) {
    const double yi = y_[i], yj = y_[j];
    const double ai_old = alpha_[i], aj_old = alpha_[j];
    double lo, hi;
    if (y_[i] != y_[j]) {
      lo = std::max(0.0, aj_old - ai_old);
      hi = std::min(C_, C_ + aj_old - ai_old);
    } else {
      lo = std::max(0.0, ai_old + aj_old - C_);
      hi = std::min(C_, ai_old + aj_old);
    }
    if (!(hi > lo)) return false;
    const double eta = 2.0 * k(i, j) - k(i, i) - k(j, j);
    if (!(eta < 0.0)) return false;

    double aj = aj_old - yj * (error_[i] - error_[j]) / eta;
    aj = snap(std::clamp(aj, lo, hi));
    if (std::abs(aj - aj_old) < 1e-12 * (aj + aj_old + 1e-12)) return false;
    const double ai = snap(std::clamp(ai_old + yi * yj * (aj_old - aj), 0.0, C_));

    const double dai = ai - ai_old;
    const double daj = aj - aj_old;
    const double b1 = b_ - error_[i] - yi * dai * k(i, i) - yj * daj * k(i, j);
    const double b2 = b_ - error_[j] - yi * dai * k(i, j) - yj * daj * k(j, j);
    double b_new;
    if (ai > 0.0 && ai < C_) {
      b_new = b1;
    } else if (aj > 0.0 && aj < C_) {
      b_new = b2;
    } else {
      b_new = 0.5 * (b1 + b2);
    }
    const double db = b_new - b_;
    alpha_[i] = ai;
    alpha_[j] = aj;
    b_ = b_new;
    for (std::size_t q = 0; q < n_; ++q) error_[q] += yi * dai * k(i, q) + yj * daj * k(j, q) + db;
    return true;
  }

  void refresh_errors() {
    for (std::size_t q = 0; q < n_; ++q) {
      double f = b_;
      for (std::size_t s = 0; s < n_; ++s)
        if (alpha_[s] > 0.0) f += alpha_[s] * y_[s] * k(s, q);
      error_[q] = f - y_[q];
    }
  }

  double max_residual_with(double b) const {
    double worst = 0.0;
    for (std::size_t q = 0; q < n_; ++q) {
      const double f = error_[q] + y_[q] - b_ + b;
      worst = std::max(worst, kkt_residual(alpha_[q], y_[q], f, C_));
    }
    return worst;
  }

  // The last pairwise update fixes b from one or two points only; averaging
  // over every free multiplier (or centring in the feasible interval when none
  // is free) usually lowers the worst KKT residual.
  void polish_bias() {
    double sum = 0.0;
    std::size_t free = 0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < n_; ++q) {
      const double g = error_[q] + y_[q] - b_;  // f without bias
      if (alpha_[q] > 0.0 && alpha_[q] < C_) {
        sum += y_[q] - g;
        ++free;
      }
      // y (g + b) >= 1 when alpha < C; y (g + b) <= 1 when alpha > 0.
      const double edge = y_[q] - g;
      if (alpha_[q] < C_) (y_[q] > 0 ? lower = std::max(lower, edge) : upper = std::min(upper, edge));
      if (alpha_[q] > 0.0) (y_[q] > 0 ? upper = std::min(upper, edge) : lower = std::max(lower, edge));
    }
    double candidate;
    if (free > 0) {
      candidate = sum / static_cast<double>(free);
    } else if (std::isfinite(lower) && std::isfinite(upper)) {
      candidate = 0.5 * (lower + upper);
    } else {
      return;
    }
    if (max_residual_with(candidate) < max_residual_with(b_)) {
      const double db = candidate - b_;
      for (auto& e : error_) e += db;
      b_ = candidate;
    }
  }

  std::size_t n_;
  const std::vector<int>& y_;
  double C_;
  double tol_;
  std::vector<double> alpha_;
  std::vector<double> error_;
  std::vector<double> gram_;
  double b_ = 0.0;
};

}  // namespace

SvmModel train_smo(const std::vector<Sample>& data, const TrainConfig& config, TrainReport* report) {
  if (data.size() < 2) throw Error(ErrorCode::SingleClass, "need at least two samples");
  if (!(config.C > 0.0) || !(config.tol > 0.0) || config.max_passes < 1) {
    throw Error(ErrorCode::InvalidArgument, "C, tol and max_passes must be positive");
  }
  const auto& names = data.front().x.names;
  bool has_pos = false, has_neg = false;
  std::vector<std::vector<double>> raw;
  std::vector<int> y;
  raw.reserve(data.size());
  y.reserve(data.size());
  for (const auto& s : data) {
    s.x.validate();
    if (s.x.names != names) throw Error(ErrorCode::InconsistentFeatures, "feature names differ between samples");
    if (s.label != 1 && s.label != -1) throw Error(ErrorCode::InvalidArgument, "labels must be +1 or -1");
    (s.label > 0 ? has_pos : has_neg) = true;
    raw.push_back(s.x.values);
    y.push_back(s.label);
  }
  if (names.empty()) throw Error(ErrorCode::InconsistentFeatures, "no features");
  if (!has_pos || !has_neg) throw Error(ErrorCode::SingleClass, "training data holds one class only");

  SvmModel model;
  model.kernel = config.kernel.value_or(Kernel::rbf(1.0 / static_cast<double>(names.size())));
  if (model.kernel.type == Kernel::Type::rbf && !(model.kernel.gamma > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "rbf gamma must be > 0");
  }
  model.scaler = Scaler::fit(raw);
  model.feature_names = names;
  model.C = config.C;
  model.negative_label = config.negative_label;
  model.positive_label = config.positive_label;

  std::vector<std::vector<double>> x;
  x.reserve(raw.size());
  for (const auto& r : raw) x.push_back(model.scaler.transform(r));

  SmoSolver solver(x, y, model.kernel, config.C, config.tol);
  const std::size_t sweeps = solver.run(config.max_passes, config.max_sweeps, config.seed);

  const auto& alpha = solver.alphas();
  double sum_alpha_y = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    sum_alpha_y += alpha[i] * y[i];
    if (alpha[i] > 0.0) {
      model.support_vectors.push_back(x[i]);
      model.dual_coefs.push_back(alpha[i] * y[i]);
    }
  }
  model.bias = solver.bias();
  const double worst = solver.max_residual();
  model.converged = worst <= config.tol && !model.support_vectors.empty();

  if (report) {
    report->alphas = alpha;
    report->sum_alpha_y = sum_alpha_y;
    report->max_kkt_residual = worst;
    report->sweeps = sweeps;
  }
  return model;
}

double decision_value(const SvmModel& model, const FeatureVector& x) {
  x.validate();
  if (x.names != model.feature_names) {
    throw Error(ErrorCode::InconsistentFeatures, "feature names do not match the model");
  }
  const auto z = model.scaler.transform(x.values);
  double f = model.bias;
  for (std::size_t i = 0; i < model.support_vectors.size(); ++i) {
    f += model.dual_coefs[i] * model.kernel(model.support_vectors[i], z);
  }
  return f;
}

Prediction predict(const SvmModel& model, const FeatureVector& x) {
  const double f = decision_value(model, x);
  Prediction p;
  p.positive = f >= 0.0;
  p.label = p.positive ? model.positive_label : model.negative_label;
  p.score = std::abs(f);
  return p;
}

const std::vector<std::string>& default_feature_names() {
  static const std::vector<std::string> names{"mean_rr", "sdnn",     "rmssd", "pnn50", "lf_power",
                                              "hf_power", "lf_hf", "sd1",   "sd2",   "sampen"};
  return names;
}

namespace {

std::optional<double> feature_value(const hrv::HrvReport& r, const std::string& name) {
  if (name == "mean_rr") return r.time.mean_rr_ms;
  if (name == "sdnn") return r.time.sdnn_ms;
  if (name == "rmssd") return r.time.rmssd_ms;
  if (name == "pnn50") return r.time.pnn50_pct;
  if (name == "mean_hr") return r.time.mean_hr_bpm;
  if (name == "vlf_power") return r.freq.vlf_power_ms2;
  if (name == "lf_power") return r.freq.lf_power_ms2;
  if (name == "hf_power") return r.freq.hf_power_ms2;
  if (name == "total_power") return r.freq.total_power_ms2;
  if (name == "lf_hf") return r.freq.lf_hf;
  if (name == "lf_nu") return r.freq.lf_nu;
  if (name == "hf_nu") return r.freq.hf_nu;
  if (name == "sd1") return r.poincare.sd1_ms;
  if (name == "sd2") return r.poincare.sd2_ms;
  if (name == "sd1_sd2") return r.poincare.sd1_sd2;
  if (name == "sampen") return r.nonlinear.sampen;
  return std::nullopt;
}

}  // namespace

FeatureVector extract_features(const hrv::HrvReport& report, const std::vector<std::string>& names) {
  FeatureVector fv;
  fv.names = names;
  fv.values.reserve(names.size());
  for (const auto& n : names) {
    const auto v = feature_value(report, n);
    if (!v || !std::isfinite(*v)) throw Error(ErrorCode::MissingFeature, n);
    fv.values.push_back(*v);
  }
  return fv;
}

ConditionResult classify_condition(const hrv::HrvReport& report, const SvmModel& stress_model,
                                   const SvmModel& flu_model) {
  ConditionResult out;
  out.stress = predict(stress_model, extract_features(report, stress_model.feature_names));
  out.influenza = predict(flu_model, extract_features(report, flu_model.feature_names));
  return out;
}

}  // namespace shesop::svm
