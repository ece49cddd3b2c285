#include "rfkpca/ratebench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "rfkpca/discrete_oracle.hpp"
#include "rfkpca/error.hpp"
#include "rfkpca/kernels.hpp"
#include "rfkpca/kpca.hpp"
#include "rfkpca/random_features.hpp"
#include "rfkpca/rng.hpp"
#include "rfkpca/task_pool.hpp"

namespace rfkpca {

namespace {

constexpr std::array<std::string_view, kMetricCount> kMetricNames = {
    "recon_pop", "recon_hat", "recon_rf_pop", "recon_rf_hat",
    "proj_hat",  "proj_rf_pop", "proj_rf_hat"};

constexpr double kLambdaGuard = 1e-8;

[[noreturn]] void config_error(const std::string& what) { fail(ErrorKind::config, what); }

[[noreturn]] void out_of_regime(const std::string& what) {
  fail(ErrorKind::out_of_regime, what);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 == 1 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

bool has_features(const ExperimentConfig& c) { return c.tau.has_value() || c.exact_features; }

std::size_t index_of(Metric m) { return static_cast<std::size_t>(m); }

// Reconstruction exponents once the random features are rich enough; the
// same piecewise form serves the exact and the random-feature estimator.
double recon_estimator_exponent(const ExperimentConfig& c) {
  const double th = c.theta;
  if (!(th > 0.0) || !(th < 0.5)) out_of_regime("reconstruction rate needs 0 < theta < 1/2");
  if (c.decay == Decay::poly) {
    const double a = c.alpha;
    if (th <= a / (4.0 * a - 1.0)) return -2.0 * th * (1.0 - 1.0 / (2.0 * a));
    return -(0.5 - th / (2.0 * a));
  }
  if (c.family == ExpoFamily::eigengap) {
    if (th <= 1.0 / 3.0) return -2.0 * th;
    return -(1.0 - th);
  }
  if (th < 0.25) return -2.0 * th;
  return -0.5;
}

double proj_hat_exponent(const ExperimentConfig& c) {
  const double th = c.theta;
  if (c.decay == Decay::poly) {
    const double a = c.alpha;
    const double b = c.beta_value();
    if (th < a / (2.0 * (2.0 * b - a))) return -(0.25 - th / 2.0);
    if (th < a / (2.0 * b)) return -(0.5 - th * b / a);
    out_of_regime("projection rate needs theta < alpha / (2 beta)");
  }
  if (th < 0.5) return -(0.25 - th / 2.0);
  out_of_regime("projection rate needs theta < 1/2");
}

// Exponent of the feature-limited projection rate, -(tau/2 - theta beta/alpha)
// or -(tau/2 - theta).
double feature_limited_exponent(const ExperimentConfig& c) {
  const double tau = *c.tau;
  if (c.decay == Decay::poly) return -(tau / 2.0 - c.theta * c.beta_value() / c.alpha);
  return -(tau / 2.0 - c.theta);
}

double require_tau(const ExperimentConfig& c, Metric m) {
  if (!c.tau && c.exact_features) return 1.0;  // exact features: the rich-feature limit
  if (!c.tau) {
    config_error(std::string("metric ") + std::string(to_string(m)) + " needs tau");
  }
  return *c.tau;
}

}  // namespace

std::string_view to_string(Metric m) noexcept { return kMetricNames[index_of(m)]; }

Metric metric_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kMetricCount; ++i) {
    if (kMetricNames[i] == s) return static_cast<Metric>(i);
  }
  config_error("unknown metric '" + std::string(s) + "'");
}

bool metric_needs_features(Metric m) noexcept {
  return m == Metric::recon_rf_pop || m == Metric::recon_rf_hat || m == Metric::proj_rf_pop ||
         m == Metric::proj_rf_hat;
}

double RateRow::value(Metric metric) const {
  const std::size_t i = index_of(metric);
  if (!present[i]) {
    fail(ErrorKind::index, "metric " + std::string(to_string(metric)) + " not recorded");
  }
  return values[i];
}

// ---------------------------------------------------------------------------
// Configuration

void validate(const ExperimentConfig& c) {
  if (c.decay == Decay::poly && !(c.alpha > 1.0)) config_error("alpha must be > 1");
  if (c.decay == Decay::expo && !(c.gamma > 0.0)) config_error("gamma must be > 0");
  if (c.beta && !(*c.beta >= c.alpha)) config_error("beta must be >= alpha");
  if (!(c.theta >= 0.0) || !std::isfinite(c.theta)) config_error("theta must be >= 0");
  if (c.tau && !(*c.tau > 0.0 && *c.tau <= 1.0)) config_error("tau must lie in (0, 1]");
  if (c.n_grid.empty()) config_error("n_grid is empty");
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
    if (c.n_grid[i] < 2) config_error("n_grid entries must be >= 2");
    if (i > 0 && c.n_grid[i] <= c.n_grid[i - 1]) config_error("n_grid must be strictly ascending");
  }
  if (c.replications == 0) config_error("replications must be >= 1");
  if (c.rank < 2) config_error("rank must be >= 2");
  if (c.atoms < c.rank + 1) {
    config_error("atoms (" + std::to_string(c.atoms) + ") must be >= rank + 1 (" +
                 std::to_string(c.rank + 1) + ")");
  }
  if (c.ell_fixed && (*c.ell_fixed < 1 || *c.ell_fixed > c.rank - 1)) {
    config_error("ell_fixed must lie in [1, rank - 1]");
  }
  if (!(c.tolerance > 0.0)) config_error("tolerance must be > 0");
  if (metric_needs_features(c.metric) && !has_features(c)) {
    config_error(std::string("metric ") + std::string(to_string(c.metric)) + " needs tau");
  }
  if (c.full_atom_samples) {
    for (std::size_t n : c.n_grid) {
      if (n != c.atoms) config_error("full_atom_samples needs every n equal to atoms");
    }
  }
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  if (!j.is_object()) config_error("experiment config must be a JSON object");
  static const std::set<std::string> known = {
      "decay",  "alpha",  "gamma",     "beta",     "theta",    "tau",
      "n_grid", "replications", "atoms", "rank",   "seed",     "metric",
      "family", "ell_fixed", "features", "tolerance", "threads", "full_atom_samples",
      "exact_features"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) config_error("unknown key '" + key + "'");
  }
  ExperimentConfig c;
  try {
    const std::string decay = j.at("decay").get<std::string>();
    if (decay == "poly") {
      c.decay = Decay::poly;
    } else if (decay == "expo") {
      c.decay = Decay::expo;
    } else {
      config_error("decay must be 'poly' or 'expo'");
    }
    if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
    if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
    if (j.contains("beta")) c.beta = j["beta"].get<double>();
    if (j.contains("theta")) c.theta = j["theta"].get<double>();
    if (j.contains("tau") && !j["tau"].is_null()) c.tau = j["tau"].get<double>();
    c.n_grid = j.at("n_grid").get<std::vector<std::size_t>>();
    if (j.contains("replications")) c.replications = j["replications"].get<std::size_t>();
    if (j.contains("atoms")) c.atoms = j["atoms"].get<std::size_t>();
    if (j.contains("rank")) c.rank = j["rank"].get<std::size_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    c.metric = metric_from_string(j.at("metric").get<std::string>());
    if (j.contains("family")) {
      const std::string f = j["family"].get<std::string>();
      if (f == "standard") {
        c.family = ExpoFamily::standard;
      } else if (f == "eigengap") {
        c.family = ExpoFamily::eigengap;
      } else {
        config_error("family must be 'standard' or 'eigengap'");
      }
    }
    if (j.contains("ell_fixed") && !j["ell_fixed"].is_null()) {
      c.ell_fixed = j["ell_fixed"].get<std::size_t>();
    }
    if (j.contains("features")) {
      const std::string f = j["features"].get<std::string>();
      if (f == "index") {
        c.features = FeatureFamily::index;
      } else if (f == "sign") {
        c.features = FeatureFamily::sign;
      } else {
        config_error("features must be 'index' or 'sign'");
      }
    }
    if (j.contains("tolerance")) c.tolerance = j["tolerance"].get<double>();
    if (j.contains("threads")) c.threads = j["threads"].get<unsigned>();
    if (j.contains("full_atom_samples")) c.full_atom_samples = j["full_atom_samples"].get<bool>();
    if (j.contains("exact_features")) c.exact_features = j["exact_features"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    config_error(std::string("experiment config: ") + e.what());
  }
  validate(c);
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["decay"] = c.decay == Decay::poly ? "poly" : "expo";
  if (c.decay == Decay::poly) {
    j["alpha"] = c.alpha;
    j["beta"] = c.beta_value();
    j["beta_defaulted"] = !c.beta.has_value();
  } else {
    j["gamma"] = c.gamma;
    j["family"] = c.family == ExpoFamily::standard ? "standard" : "eigengap";
  }
  j["theta"] = c.theta;
  j["tau"] = c.tau ? nlohmann::json(*c.tau) : nlohmann::json(nullptr);
  j["n_grid"] = c.n_grid;
  j["replications"] = c.replications;
  j["atoms"] = c.atoms;
  j["rank"] = c.rank;
  j["seed"] = c.seed;
  j["metric"] = std::string(to_string(c.metric));
  j["ell_fixed"] = c.ell_fixed ? nlohmann::json(*c.ell_fixed) : nlohmann::json(nullptr);
  j["features"] = c.features == FeatureFamily::sign ? "sign" : "index";
  j["tolerance"] = c.tolerance;
  if (c.full_atom_samples) j["full_atom_samples"] = true;
  if (c.exact_features) j["exact_features"] = true;
  return j;
}

std::size_t ell_for(const ExperimentConfig& c, std::size_t n) {
  if (c.ell_fixed) return *c.ell_fixed;
  const double nn = static_cast<double>(n);
  const double x = c.decay == Decay::poly ? std::pow(nn, c.theta / c.alpha)
                                          : c.theta * std::log(nn) / c.gamma;
  const double r = std::floor(x + 0.5);
  const double hi = static_cast<double>(c.rank - 1);
  return static_cast<std::size_t>(std::clamp(r, 1.0, hi));
}

std::size_t m_for(const ExperimentConfig& c, std::size_t n) {
  if (!c.tau) fail(ErrorKind::config, "m(n) needs tau");
  const double r = std::floor(std::pow(static_cast<double>(n), *c.tau) + 0.5);
  return static_cast<std::size_t>(std::max(r, 1.0));
}

// ---------------------------------------------------------------------------
// Predictions

double predicted_exponent(const ExperimentConfig& c) { return predicted_exponent(c, c.metric); }

double predicted_exponent(const ExperimentConfig& c, Metric metric) {
  const double th = c.theta;
  switch (metric) {
    case Metric::recon_pop:
      if (!(th > 0.0)) out_of_regime("population reconstruction rate needs theta > 0");
      return c.decay == Decay::poly ? -2.0 * th * (1.0 - 1.0 / (2.0 * c.alpha)) : -2.0 * th;

    case Metric::recon_hat:
      return recon_estimator_exponent(c);

    case Metric::recon_rf_pop: {
      const double tau = require_tau(c, metric);
      if (!(th > 0.0)) out_of_regime("population reconstruction rate needs theta > 0");
      const double bias = c.decay == Decay::poly ? 2.0 * th * (1.0 - 1.0 / (2.0 * c.alpha))
                                                 : 2.0 * th;
      return tau >= bias ? -bias : -tau;
    }

    case Metric::recon_rf_hat: {
      const double tau = require_tau(c, metric);
      if (!(tau > 2.0 * th)) out_of_regime("random-feature reconstruction rate needs tau > 2 theta");
      return recon_estimator_exponent(c);
    }

    case Metric::proj_hat:
      return proj_hat_exponent(c);

    case Metric::proj_rf_pop: {
      require_tau(c, metric);
      const double e = feature_limited_exponent(c);
      if (!(e < 0.0)) out_of_regime("feature projection rate is not decaying for this tau");
      return e;
    }

    case Metric::proj_rf_hat: {
      const double tau = require_tau(c, metric);
      if (c.decay == Decay::poly) {
        const double a = c.alpha;
        const double b = c.beta_value();
        const double lower = 2.0 * th * b / a;
        if (th < a / (2.0 * (2.0 * b - a))) {
          const double thr = 0.5 + th * (2.0 * b - a) / a;
          if (tau > thr) return -(0.25 - th / 2.0);
          if (tau > lower) return feature_limited_exponent(c);
          out_of_regime("random-feature projection rate needs tau > 2 theta beta / alpha");
        }
        if (th < a / (2.0 * b)) {
          if (tau > lower) return feature_limited_exponent(c);
          out_of_regime("random-feature projection rate needs tau > 2 theta beta / alpha");
        }
        out_of_regime("projection rate needs theta < alpha / (2 beta)");
      }
      if (!(th < 0.5)) out_of_regime("projection rate needs theta < 1/2");
      if (tau >= 0.5 + th) return -(0.25 - th / 2.0);
      const double e = feature_limited_exponent(c);
      if (!(e < 0.0)) out_of_regime("random-feature projection rate needs tau > 2 theta");
      return e;
    }
  }
  fail(ErrorKind::config, "unknown metric");
}

double transition_threshold(const ExperimentConfig& c) {
  if (c.decay == Decay::poly) {
    const double a = c.alpha;
    return 0.5 + c.theta * (2.0 * c.beta_value() - a) / a;
  }
  return 0.5 + c.theta;
}

// ---------------------------------------------------------------------------
// Slope fitting

SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 4) {
    fail(ErrorKind::size, "slope fit needs at least 4 points, got " + std::to_string(points.size()));
  }
  std::vector<double> xs, ys;
  for (const auto& [n, v] : points) {
    if (!(v > 0.0) || !(n > 0.0)) {
      fail(ErrorKind::log_domain, "slope fit needs positive values, got " + fmt17(v) + " at n=" +
                                      fmt17(n));
    }
    xs.push_back(std::log(n));
    ys.push_back(std::log(v));
  }
  const double k = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) fail(ErrorKind::size, "slope fit needs distinct n values");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (f.intercept + f.slope * xs[i]);
    ssr += r * r;
  }
  f.stderr_ = std::sqrt(ssr / (k - 2.0) / sxx);
  return f;
}

// ---------------------------------------------------------------------------
// Grid

namespace {

struct Oracle {
  DiscreteMeasure measure;
  Kernel kernel;
  PopOperator s_j;
  double s_j_hs = 0.0;
};

Oracle build_oracle(const ExperimentConfig& c) {
  Oracle o;
  o.measure = DiscreteMeasure::uniform(c.atoms);
  const std::vector<double> lambdas =
      c.decay == Decay::poly ? poly_spectrum(c.alpha, c.rank) : expo_spectrum(c.gamma, c.rank);
  try {
    o.kernel = make_finite_rank_kernel(o.measure, lambdas, derive_seed(c.seed, "kernel"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::capacity) config_error(e.what());
    throw;
  }
  o.s_j = op_jj(o.kernel, o.measure);
  o.s_j_hs = frobenius_norm(o.s_j.sym_matrix.matrix());
  return o;
}

struct CellResult {
  RateRow row;
  std::array<InequalityTally, 3> prop8{};
  InequalityTally monotone;
};

void tally(InequalityTally& t, double lhs, double rhs) {
  ++t.checked;
  if (lhs > rhs + kInequalitySlack * (1.0 + rhs)) ++t.violations;
  const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? INFINITY : 0.0);
  t.max_ratio = std::max(t.max_ratio, ratio);
}

void merge(InequalityTally& into, const InequalityTally& t) {
  into.checked += t.checked;
  into.violations += t.violations;
  into.max_ratio = std::max(into.max_ratio, t.max_ratio);
}

[[noreturn]] void guard_error(std::size_t n, std::size_t ell, const std::string& what) {
  config_error("guard violated at (n=" + std::to_string(n) + ", ell=" + std::to_string(ell) +
               "): " + what);
}

void check_model_guard(std::size_t n, std::size_t ell, const std::vector<double>& eig,
                       const char* which) {
  if (eig.size() < ell) {
    guard_error(n, ell, std::string(which) + " has rank " + std::to_string(eig.size()));
  }
  if (eig[ell - 1] < kLambdaGuard * eig[0]) {
    guard_error(n, ell, std::string(which) + " eigenvalue " + fmt17(eig[ell - 1]) +
                            " below 1e-8 of the top one");
  }
}

FeatureSample draw_features(const ExperimentConfig& c, const Kernel& k, std::size_t m,
                            std::uint64_t seed) {
  if (c.exact_features) {
    FiniteRankOptions opt;
    opt.deterministic = true;
    return sample_finite_rank(k, 0, seed, opt);
  }
  if (c.features == FeatureFamily::sign) return sample_finite_rank_signs(k, m, seed);
  return sample_finite_rank(k, m, seed);
}

CellResult evaluate_cell(const ExperimentConfig& c, const Oracle& o, std::size_t n,
                         std::size_t rep) {
  CellResult out;
  RateRow& row = out.row;
  row.n = n;
  row.rep = rep;
  const std::size_t ell = ell_for(c, n);
  row.ell = ell;
  if (c.rank < ell + 1) guard_error(n, ell, "rank must be >= ell + 1");

  auto put = [&](Metric m, double v) {
    row.values[index_of(m)] = v;
    row.present[index_of(m)] = true;
  };

  Points samples;
  if (c.full_atom_samples) {
    samples = o.measure.atoms();
  } else {
    samples = draw_samples(o.measure, n, derive_seed(c.seed, "samples", {n, rep}));
  }

  const KpcaModel model = fit_exact_compressed(o.kernel, samples);
  check_model_guard(n, ell, model.eigvals, "empirical covariance");

  const ProjectionLike P = proj_pop(o.s_j, ell);
  const double r_pop = recon_error(ReconVariant::pop, o.s_j, P);
  put(Metric::recon_pop, r_pop);

  const ProjectionLike P_hat = proj_hat(model, o.kernel, o.measure, ell);
  const double r_hat = recon_error(ReconVariant::hat, o.s_j, P_hat);
  put(Metric::recon_hat, r_hat);
  const double d_hat = proj_distance(P, P_hat);
  put(Metric::proj_hat, d_hat);
  tally(out.prop8[0], std::abs(std::sqrt(r_hat) - std::sqrt(r_pop)), o.s_j_hs * d_hat);

  // Bias monotonicity over the guarded part of the fitted spectrum.
  {
    std::size_t top = std::min({ell + 2, model.rank(), c.rank - 1});
    while (top > 1 && model.eigvals[top - 1] < kLambdaGuard * model.eigvals[0]) --top;
    double prev = recon_error(ReconVariant::hat, o.s_j, proj_hat(model, o.kernel, o.measure, 1));
    for (std::size_t l = 2; l <= top; ++l) {
      const double cur =
          recon_error(ReconVariant::hat, o.s_j, proj_hat(model, o.kernel, o.measure, l));
      tally(out.monotone, cur, prev);
      prev = cur;
    }
  }

  if (has_features(c)) {
    const std::size_t m = c.tau ? m_for(c, n) : 0;
    const FeatureSample fs =
        draw_features(c, o.kernel, m, derive_seed(c.seed, "features", {n, rep}));
    row.m = fs.m();
    const PopOperator s_a = op_aa(fs, o.measure);
    const std::size_t pop_rank = s_a.spectrum.numerical_rank();
    if (pop_rank < ell) {
      guard_error(n, ell, "feature covariance has rank " + std::to_string(pop_rank));
    }
    const ProjectionLike P_a = proj_pop(s_a, ell);
    const double r_rf_pop = recon_error(ReconVariant::rf_pop, o.s_j, P_a);
    const double d_rf_pop = proj_distance(P, P_a);
    put(Metric::recon_rf_pop, r_rf_pop);
    put(Metric::proj_rf_pop, d_rf_pop);
    tally(out.prop8[1], std::abs(std::sqrt(r_rf_pop) - std::sqrt(r_pop)), o.s_j_hs * d_rf_pop);

    const RfKpcaModel rf = fit_rf(fs, samples);
    check_model_guard(n, ell, rf.spectrum.eigenvalues, "empirical feature covariance");
    const ProjectionLike P_m = proj_hat_rf(rf, o.measure, ell);
    const double r_rf_hat = recon_error(ReconVariant::rf_hat, o.s_j, P_m);
    const double d_rf_hat = proj_distance(P, P_m);
    put(Metric::recon_rf_hat, r_rf_hat);
    put(Metric::proj_rf_hat, d_rf_hat);
    tally(out.prop8[2], std::abs(std::sqrt(r_rf_hat) - std::sqrt(r_pop)), o.s_j_hs * d_rf_hat);
  }
  return out;
}

}  // namespace

std::vector<std::pair<std::size_t, double>> RateReport::medians_for(Metric metric) const {
  std::vector<std::pair<std::size_t, double>> out;
  std::size_t i = 0;
  while (i < rows.size()) {
    const std::size_t n = rows[i].n;
    std::vector<double> vs;
    for (; i < rows.size() && rows[i].n == n; ++i) vs.push_back(rows[i].value(metric));
    out.emplace_back(n, median(std::move(vs)));
  }
  return out;
}

SlopeFit slope_for(const RateReport& r, Metric metric) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [n, v] : r.medians_for(metric)) pts.emplace_back(static_cast<double>(n), v);
  return fit_slope(pts);
}

RateReport run_grid(const ExperimentConfig& c) {
  validate(c);
  for (std::size_t n : c.n_grid) {
    const std::size_t ell = ell_for(c, n);
    if (c.rank < ell + 1) guard_error(n, ell, "rank must be >= ell + 1");
  }
  const Oracle oracle = build_oracle(c);
  for (std::size_t n : c.n_grid) {
    const std::size_t ell = ell_for(c, n);
    const auto& ev = oracle.s_j.spectrum.eigenvalues;
    if (ev[ell - 1] < kLambdaGuard * ev[0]) {
      guard_error(n, ell, "population eigenvalue below 1e-8 of the top one");
    }
  }

  const std::size_t reps = c.replications;
  const std::size_t cells = c.n_grid.size() * reps;
  std::vector<CellResult> results(cells);
  parallel_for(cells, c.threads, [&](std::size_t t) {
    results[t] = evaluate_cell(c, oracle, c.n_grid[t / reps], t % reps);
  });

  RateReport r;
  r.config = c;
  r.rows.reserve(cells);
  for (const CellResult& cr : results) {
    r.rows.push_back(cr.row);
    for (std::size_t i = 0; i < 3; ++i) merge(r.prop8[i], cr.prop8[i]);
    merge(r.monotone_bias, cr.monotone);
  }
  r.medians = r.medians_for(c.metric);

  try {
    r.predicted = predicted_exponent(c);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::out_of_regime) throw;
    r.prediction_note = e.what();
  }
  if (r.medians.size() >= 4) {
    r.fit = slope_for(r, c.metric);
    if (r.predicted) r.verdict = std::abs(r.fit->slope - *r.predicted) <= c.tolerance;
  } else {
    r.prediction_note += r.prediction_note.empty() ? "" : "; ";
    r.prediction_note += "fewer than 4 grid points, slope not fitted";
  }
  return r;
}

std::string to_csv(const RateReport& r) {
  std::ostringstream os;
  os << "n,m,ell,rep,metric,value\n";
  for (const RateRow& row : r.rows) {
    for (std::size_t i = 0; i < kMetricCount; ++i) {
      if (!row.present[i]) continue;
      os << row.n << ',' << row.m << ',' << row.ell << ',' << row.rep << ',' << kMetricNames[i]
         << ',' << fmt17(row.values[i]) << '\n';
    }
  }
  return os.str();
}

namespace {

nlohmann::json tally_json(const InequalityTally& t) {
  return {{"checked", t.checked}, {"violations", t.violations}, {"max_ratio", t.max_ratio}};
}

}  // namespace

nlohmann::json summary_json(const RateReport& r) {
  nlohmann::json j;
  j["config"] = to_json(r.config);
  j["metric"] = std::string(to_string(r.config.metric));
  if (r.config.decay == Decay::poly) {
    j["beta"] = r.config.beta_value();
    j["beta_note"] = r.config.beta ? "configured"
                                   : "defaulted to alpha + 1: for lambda_i = i^-alpha the "
                                     "eigengaps decay like i^-(alpha+1)";
  }
  nlohmann::json med = nlohmann::json::array();
  for (const auto& [n, v] : r.medians) med.push_back({{"n", n}, {"median", v}});
  j["medians"] = med;
  j["slope"] = r.fit ? nlohmann::json(r.fit->slope) : nlohmann::json(nullptr);
  j["slope_stderr"] = r.fit ? nlohmann::json(r.fit->stderr_) : nlohmann::json(nullptr);
  j["predicted"] = r.predicted ? nlohmann::json(*r.predicted) : nlohmann::json(nullptr);
  j["tolerance"] = r.config.tolerance;
  j["verdict"] = r.verdict ? nlohmann::json(*r.verdict ? "pass" : "fail") : nlohmann::json("n/a");
  if (!r.prediction_note.empty()) j["note"] = r.prediction_note;

  nlohmann::json slopes = nlohmann::json::object();
  if (!r.rows.empty() && r.medians.size() >= 4) {
    for (std::size_t i = 0; i < kMetricCount; ++i) {
      if (!r.rows.front().present[i]) continue;
      const Metric m = static_cast<Metric>(i);
      nlohmann::json e;
      try {
        const SlopeFit f = slope_for(r, m);
        e["slope"] = f.slope;
        e["stderr"] = f.stderr_;
      } catch (const Error& err) {
        e["error"] = err.what();
      }
      try {
        e["predicted"] = predicted_exponent(r.config, m);
      } catch (const Error&) {
        e["predicted"] = nullptr;
      }
      slopes[std::string(to_string(m))] = e;
    }
  }
  j["all_slopes"] = slopes;
  j["prop8"] = {{"hat", tally_json(r.prop8[0])},
                {"rf_pop", tally_json(r.prop8[1])},
                {"rf_hat", tally_json(r.prop8[2])},
                {"slack", kInequalitySlack}};
  j["monotone_bias"] = tally_json(r.monotone_bias);
  return j;
}

// ---------------------------------------------------------------------------
// Transition

TransitionTable transition_study(const ExperimentConfig& base, const std::vector<double>& taus) {
  if (base.metric != Metric::proj_rf_hat) config_error("transition study needs metric proj_rf_hat");
  if (taus.empty()) config_error("transition study needs at least one tau");
  TransitionTable table;
  for (double tau : taus) {
    ExperimentConfig c = base;
    c.tau = tau;
    TransitionRow row;
    row.tau = tau;
    row.threshold = transition_threshold(c);
    row.matching_regime = c.decay == Decay::expo ? tau >= row.threshold : tau > row.threshold;
    row.report = run_grid(c);
    if (!table.reference_slope) table.reference_slope = slope_for(row.report, Metric::proj_hat).slope;
    row.slope = row.report.slope();
    row.target = row.matching_regime ? *table.reference_slope : feature_limited_exponent(c);
    row.pass = std::abs(row.slope - row.target) <= base.tolerance;
    table.pass = table.pass && row.pass;
    table.rows.push_back(std::move(row));
  }
  return table;
}

nlohmann::json summary_json(const TransitionTable& t) {
  nlohmann::json j;
  j["reference_slope"] =
      t.reference_slope ? nlohmann::json(*t.reference_slope) : nlohmann::json(nullptr);
  nlohmann::json rows = nlohmann::json::array();
  for (const TransitionRow& r : t.rows) {
    rows.push_back({{"tau", r.tau},
                    {"threshold", r.threshold},
                    {"regime", r.matching_regime ? "matching" : "feature_limited"},
                    {"slope", r.slope},
                    {"target", r.target},
                    {"verdict", r.pass ? "pass" : "fail"},
                    {"run", summary_json(r.report)}});
  }
  j["rows"] = rows;
  j["verdict"] = t.pass ? "pass" : "fail";
  return j;
}

}  // namespace rfkpca
