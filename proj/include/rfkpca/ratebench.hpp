#pragma once

// Convergence-rate harness: sweeps sample sizes over a synthetic finite-rank
// kernel, computes exact errors against the population operator and fits
// log-log slopes for comparison with the predicted exponents.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rfkpca {

enum class Decay { poly, expo };

enum class Metric {
  recon_pop,
  recon_hat,
  recon_rf_pop,
  recon_rf_hat,
  proj_hat,
  proj_rf_pop,
  proj_rf_hat,
};
inline constexpr std::size_t kMetricCount = 7;

std::string_view to_string(Metric m) noexcept;
Metric metric_from_string(std::string_view s);
bool metric_needs_features(Metric m) noexcept;

/// Which eigenvalue-decay corollary supplies the exponential-decay
/// reconstruction prediction: the plain one, or the sharper one that assumes
/// an eigengap condition.
enum class ExpoFamily { standard, eigengap };

/// Random features used for the RF estimators. `index` picks one basis
/// function per draw; `sign` mixes all of them with random signs.
enum class FeatureFamily { index, sign };

struct ExperimentConfig {
  Decay decay = Decay::poly;
  double alpha = 2.0;               // poly
  double gamma = 0.5;               // expo
  std::optional<double> beta;       // eigengap decay exponent; default alpha + 1
  double theta = 0.0;
  std::optional<double> tau;        // absent: exact EKPCA only
  std::vector<std::size_t> n_grid;
  std::size_t replications = 10;
  std::size_t atoms = 192;          // N
  std::size_t rank = 60;            // T
  std::uint64_t seed = 0;
  Metric metric = Metric::recon_hat;
  ExpoFamily family = ExpoFamily::standard;
  std::optional<std::size_t> ell_fixed;
  FeatureFamily features = FeatureFamily::sign;
  double tolerance = 0.15;
  unsigned threads = 1;             // 0: auto

  // Test hooks.
  bool full_atom_samples = false;   // each sample is the atom set, once
  bool exact_features = false;      // features reproduce the kernel exactly

  double beta_value() const noexcept { return beta ? *beta : alpha + 1.0; }
};

/// Parses and validates a config object; unknown keys are rejected.
ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);

/// Checks field ranges; throws a config error.
void validate(const ExperimentConfig& c);

std::size_t ell_for(const ExperimentConfig& c, std::size_t n);
std::size_t m_for(const ExperimentConfig& c, std::size_t n);

/// Negative exponent of the predicted n-rate for the configured metric.
double predicted_exponent(const ExperimentConfig& c);
double predicted_exponent(const ExperimentConfig& c, Metric metric);

struct SlopeFit {
  double slope = 0.0;
  double stderr_ = 0.0;
  double intercept = 0.0;
};

/// OLS of ln(value) on ln(n).
SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points);

struct RateRow {
  std::size_t n = 0;
  std::size_t m = 0;  // 0 without features
  std::size_t ell = 0;
  std::size_t rep = 0;
  std::array<double, kMetricCount> values{};
  std::array<bool, kMetricCount> present{};

  double value(Metric metric) const;
};

/// | sqrt(R_est) - sqrt(R_pop) | <= ||S_J||_HS ||P - Q||_op for the three
/// estimators. Counts are over cells.
struct InequalityTally {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;  // lhs / rhs, 0 when rhs == 0 and lhs == 0
};

struct RateReport {
  ExperimentConfig config;
  std::vector<RateRow> rows;  // sorted by (n, rep)
  std::vector<std::pair<std::size_t, double>> medians;
  std::optional<SlopeFit> fit;
  std::optional<double> predicted;
  std::string prediction_note;
  /// Unset when there is nothing to assert (fewer than four grid points or
  /// no applicable prediction).
  std::optional<bool> verdict;

  std::array<InequalityTally, 3> prop8{};
  InequalityTally monotone_bias;  // one check per adjacent (ell, ell + 1) pair

  double slope() const noexcept { return fit ? fit->slope : 0.0; }
  std::vector<std::pair<std::size_t, double>> medians_for(Metric metric) const;
};

inline constexpr double kInequalitySlack = 1e-8;

RateReport run_grid(const ExperimentConfig& c);

/// Slope of the medians of any recorded metric.
SlopeFit slope_for(const RateReport& r, Metric metric);

std::string to_csv(const RateReport& r);
nlohmann::json summary_json(const RateReport& r);

struct TransitionRow {
  double tau = 0.0;
  double threshold = 0.0;
  bool matching_regime = false;  // tau at or above the threshold
  double slope = 0.0;
  double target = 0.0;           // reference slope or feature-limited exponent
  bool pass = false;
  RateReport report;
};

struct TransitionTable {
  std::optional<double> reference_slope;
  std::vector<TransitionRow> rows;
  bool pass = true;
};

/// tau at which the random-feature projection rate stops being feature
/// limited.
double transition_threshold(const ExperimentConfig& c);

/// One proj_rf_hat run per tau; the exact-EKPCA reference slope comes from
/// the same samples.
TransitionTable transition_study(const ExperimentConfig& base, const std::vector<double>& taus);

nlohmann::json summary_json(const TransitionTable& t);

}  // namespace rfkpca
