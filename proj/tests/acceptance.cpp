// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "rfkpca/bounds_lab.hpp"
#include "rfkpca/cli.hpp"
#include "rfkpca/discrete_oracle.hpp"
#include "rfkpca/kpca.hpp"
#include "rfkpca/random_features.hpp"
#include "rfkpca/ratebench.hpp"
#include "rfkpca/rng.hpp"

using namespace rfkpca;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string config_path(const std::string& name) {
  return std::string(RFKPCA_CONFIG_DIR) + "/" + name;
}

nlohmann::json load(const std::string& name) {
  std::ifstream in(config_path(name));
  return nlohmann::json::parse(in);
}

ExperimentConfig experiment(const std::string& name) {
  ExperimentConfig c = experiment_from_json(load(name));
  c.threads = 0;
  return c;
}

// Runs of criteria 8-11, kept for the inequality tally.
std::vector<RateReport> g_reports;

const RateReport& keep(RateReport r) {
  g_reports.push_back(std::move(r));
  return g_reports.back();
}

std::string slope_text(double slope, double target, double tol) {
  return "slope " + fmt("%.4f", slope) + " vs " + fmt("%.4f", target) + " +- " + fmt("%.2f", tol);
}

Outcome c1_population_identity() {
  const DiscreteMeasure mu = DiscreteMeasure::uniform(128);
  const Kernel k = make_finite_rank_kernel(mu, poly_spectrum(2.0, 40), 1);
  const PopOperator s = op_jj(k, mu);
  double worst = 0.0;
  for (std::size_t ell = 1; ell <= 20; ++ell) {
    const double tail = tail_energy(s.spectrum, ell);
    const double r = recon_error(ReconVariant::pop, s, proj_pop(s, ell));
    worst = std::max(worst, std::abs(r - tail) / tail);
  }
  return {worst <= 1e-10, "max relative error " + fmt("%.3g", worst)};
}

Outcome c2_rff_identity() {
  Rng rng(2);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(200, 3);
  for (double& v : x.data()) v = normal(rng);
  const Points pts = Points::vectors(x);
  double worst_form = 0.0, worst_norm = 0.0;
  for (std::size_t m : {1u, 8u, 64u}) {
    const FeatureSample fs = sample_rff(1.0, 3, m, 100 + m);
    for (std::size_t p = 0; p < 100; ++p) {
      const PointRef a = pts[2 * p], b = pts[2 * p + 1];
      worst_form = std::max(worst_form, std::abs(approx_kernel(fs, a, b) - rff_cosine_form(fs, a, b)));
      const auto phi = fs.eval(a);
      double sq = 0.0;
      for (double v : phi) sq += v * v;
      worst_norm = std::max(worst_norm, std::abs(sq - 1.0));
    }
  }
  return {worst_form <= 1e-12 && worst_norm <= 1e-15,
          "form diff " + fmt("%.3g", worst_form) + ", norm diff " + fmt("%.3g", worst_norm)};
}

Outcome c3_gram_route() {
  const DiscreteMeasure mu = DiscreteMeasure::uniform(64);
  const Kernel k = make_finite_rank_kernel(mu, poly_spectrum(2.0, 10), 3);
  double worst_eig = 0.0, worst_orth = 0.0;
  for (std::size_t n : {20u, 50u, 100u}) {
    const Points s = draw_samples(mu, n, 300 + n);
    const KpcaModel model = fit_exact(k, s);
    // Explicit covariance of (sqrt(lambda_t) psi_t(x))_t.
    const std::size_t T = k.lambdas().size();
    Matrix f(n, T);
    std::vector<double> mean(T, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t t = 0; t < T; ++t) {
        f(i, t) = std::sqrt(k.lambdas()[t]) * k.basis().values(t, s[i].atom);
        mean[t] += f(i, t) / static_cast<double>(n);
      }
    Matrix c(T, T);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < T; ++a)
        for (std::size_t b = 0; b < T; ++b)
          c(a, b) += (f(i, a) - mean[a]) * (f(i, b) - mean[b]) / static_cast<double>(n);
    const std::vector<double> ref = oracle::jacobi_eigenvalues(c);
    if (model.rank() > ref.size()) return {false, "rank exceeds feature dimension"};
    for (std::size_t i = 0; i < model.rank(); ++i) {
      worst_eig = std::max(worst_eig, std::abs(model.eigvals[i] - ref[i]) / ref[i]);
    }
    for (std::size_t i = 0; i < model.rank(); ++i)
      for (std::size_t j = 0; j < model.rank(); ++j) {
        double q = 0.0;
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = 0; b < n; ++b)
            q += model.dual_coeffs[i][a] * model.gram(a, b) * model.dual_coeffs[j][b];
        q /= static_cast<double>(n) * model.eigvals[i];
        worst_orth = std::max(worst_orth, std::abs(q - (i == j ? 1.0 : 0.0)));
      }
  }
  return {worst_eig <= 1e-8 && worst_orth <= 1e-8,
          "eigenvalue rel err " + fmt("%.3g", worst_eig) + ", orthonormality " + fmt("%.3g", worst_orth)};
}

Outcome c4_primal_dual() {
  const DiscreteMeasure mu = DiscreteMeasure::uniform(64);
  const Kernel k = make_finite_rank_kernel(mu, poly_spectrum(2.0, 10), 4);
  FiniteRankOptions opt;
  opt.deterministic = true;
  const FeatureSample fs = sample_finite_rank(k, 0, 0, opt);
  double worst_eig = 0.0, worst_embed = 0.0;
  for (std::uint64_t run = 0; run < 10; ++run) {
    const Points s = draw_samples(mu, 80, 400 + run);
    const KpcaModel ek = fit_exact_compressed(k, s);
    const RfKpcaModel rf = fit_rf(fs, s);
    if (ek.rank() != rf.rank()) return {false, "ranks differ on run " + std::to_string(run)};
    for (std::size_t i = 0; i < ek.rank(); ++i) {
      worst_eig = std::max(worst_eig, std::abs(ek.eigvals[i] - rf.spectrum.eigenvalues[i]));
    }
    const std::size_t ell = 4;
    std::vector<std::vector<double>> a(ell), b(ell);
    for (std::size_t x = 0; x < mu.size(); ++x) {
      const auto ea = embed_exact(ek, k, PointRef::of_atom(x), ell);
      const auto eb = embed_rf(rf, PointRef::of_atom(x), ell);
      for (std::size_t i = 0; i < ell; ++i) {
        a[i].push_back(ea[i]);
        b[i].push_back(eb[i]);
      }
    }
    for (std::size_t i = 0; i < ell; ++i) worst_embed = std::max(worst_embed, oracle::diff_up_to_sign(a[i], b[i]));
  }
  return {worst_eig <= 1e-8 && worst_embed <= 1e-6,
          "spectra " + fmt("%.3g", worst_eig) + ", embeddings " + fmt("%.3g", worst_embed)};
}

Outcome c5_perturbation() {
  const SuiteReport r = perturbation_suite(1000, 5);
  return {r.violations == 0 && r.cases == 1000,
          std::to_string(r.violations) + " violations in " + std::to_string(r.cases) +
              " cases, weighted bound beats trivial in " +
              fmt("%.3f", r.extra["fraction_weighted_beats_trivial"].get<double>())};
}

Outcome c6_randomized_suites() {
  const SuiteReport a = operator_inequality_suite(1000, 6);
  const SuiteReport b = tensor_lemma_suite(1000, 6);
  const SuiteReport c = rank_one_suite(1000, 6);
  const std::size_t v = a.violations + b.violations + c.violations;
  return {v == 0, "violations: operator " + std::to_string(a.violations) + ", tensor " +
                      std::to_string(b.violations) + ", rank-one " + std::to_string(c.violations)};
}

Outcome c7_concentration() {
  McTailConfig cfg;
  cfg.tau = 2.0;
  cfg.replications = 200;
  cfg.threads = 0;
  const McTailResult cov = mc_tail(TailExperiment::cov_deviation, cfg);
  const McTailResult feat = mc_tail(TailExperiment::feature_op_deviation, cfg);
  const bool ok = cov.exceed_fraction < 4.0 * std::exp(-2.0) && feat.exceed_fraction < 2.0 * std::exp(-2.0);
  return {ok, "exceedance " + fmt("%.3f", cov.exceed_fraction) + " / " + fmt("%.3f", feat.exceed_fraction)};
}

Outcome c8_poly_recon() {
  const RateReport a = keep(run_grid(experiment("poly_a2.json")));
  const RateReport b = keep(run_grid(experiment("poly_a2_rf.json")));
  const double target = -3.0 / 7.0;
  const double sa = slope_for(a, Metric::recon_hat).slope;
  const double sb = slope_for(b, Metric::recon_rf_hat).slope;
  const bool ok = std::abs(sa - target) <= 0.15 && std::abs(sb - target) <= 0.15;
  return {ok, "recon_hat " + slope_text(sa, target, 0.15) + "; recon_rf_hat " + slope_text(sb, target, 0.15)};
}

Outcome c9_expo_recon() {
  const RateReport a = keep(run_grid(experiment("expo_g05.json")));
  const RateReport b = keep(run_grid(experiment("expo_g05_rf.json")));
  const double sa = slope_for(a, Metric::recon_hat).slope;
  const double sb = slope_for(b, Metric::recon_rf_hat).slope;
  const bool ok = std::abs(sa + 0.4) <= 0.12 && sb >= -0.65 && sb <= -0.35;
  return {ok, "recon_hat " + slope_text(sa, -0.4, 0.12) + "; recon_rf_hat slope " + fmt("%.4f", sb) +
                  " in [-0.65, -0.35]"};
}

Outcome c10_projection() {
  const RateReport r = keep(run_grid(experiment("proj_expo.json")));
  const double s = slope_for(r, Metric::proj_hat).slope;
  return {std::abs(s + 0.25) <= 0.10, "proj_hat " + slope_text(s, -0.25, 0.10)};
}

Outcome c11_transition() {
  nlohmann::json raw = load("transition_expo.json");
  const std::vector<double> taus = raw["taus"].get<std::vector<double>>();
  raw.erase("taus");
  raw["tau"] = taus.front();
  ExperimentConfig c = experiment_from_json(raw);
  c.threads = 0;
  const TransitionTable t = transition_study(c, {0.25, 0.8});
  for (const TransitionRow& row : t.rows) keep(row.report);
  const double ref = *t.reference_slope;
  const double low = t.rows[0].report.slope();
  const double high = t.rows[1].report.slope();
  const bool ok = std::abs(high - ref) <= 0.10 && std::abs(low + 0.125) <= 0.10;
  return {ok, "tau=0.8 slope " + fmt("%.4f", high) + " vs exact " + fmt("%.4f", ref) + " +- 0.10; tau=0.25 " +
                  slope_text(low, -0.125, 0.10)};
}

Outcome c12_inequalities() {
  std::size_t checked = 0, violations = 0;
  for (const RateReport& r : g_reports)
    for (const InequalityTally& t : r.prop8) {
      checked += t.checked;
      violations += t.violations;
    }
  return {checked > 0 && violations == 0,
          std::to_string(violations) + " violations in " + std::to_string(checked) + " checks over " +
              std::to_string(g_reports.size()) + " runs"};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome c13_determinism() {
  struct Job {
    Command command;
    std::string config;
  };
  const std::vector<Job> jobs = {
      {Command::spectrum, "spectrum.json"},       {Command::rates, "poly_a2.json"},
      {Command::rates, "poly_a2_rf.json"},        {Command::rates, "expo_g05.json"},
      {Command::rates, "expo_g05_rf.json"},       {Command::rates, "proj_expo.json"},
      {Command::transition, "transition_expo.json"}, {Command::bounds, "perturb.json"},
      {Command::concentration, "concentration.json"}};
  const fs::path root = fs::temp_directory_path() / "rfkpca_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::string> differing;
  for (const Job& job : jobs) {
    std::string csv[2];
    for (int pass = 0; pass < 2; ++pass) {
      const fs::path dir = root / (job.config + "." + std::to_string(pass));
      fs::create_directories(dir);
      RunConfig rc;
      rc.command = job.command;
      rc.config_path = config_path(job.config);
      rc.output_dir = dir.string();
      rc.threads = 2;
      std::ostringstream out, err;
      const int code = run(rc, out, err);
      if (code != kExitOk && code != kExitAssertion) return {false, job.config + ": exit " + std::to_string(code)};
      csv[pass] = read_file(dir / "results.csv");
    }
    if (csv[0].empty() || csv[0] != csv[1]) differing.push_back(job.config);
  }
  fs::remove_all(root);
  std::string detail = std::to_string(jobs.size() - differing.size()) + "/" + std::to_string(jobs.size()) +
                       " suites byte-identical";
  for (const auto& d : differing) detail += ", differs: " + d;
  return {differing.empty(), detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "population reconstruction equals tail energy", 5, c1_population_identity},
      {2, "random Fourier feature identity", 1, c2_rff_identity},
      {3, "Gram route matches explicit covariance", 5, c3_gram_route},
      {4, "exact features reproduce EKPCA", 5, c4_primal_dual},
      {5, "perturbation bounds", 30, c5_perturbation},
      {6, "operator, tensor and rank-one suites", 30, c6_randomized_suites},
      {7, "concentration exceedance", 120, c7_concentration},
      {8, "polynomial-decay reconstruction rate", 900, c8_poly_recon},
      {9, "exponential-decay reconstruction rate", 900, c9_expo_recon},
      {10, "projection rate with fixed ell", 600, c10_projection},
      {11, "m = sqrt(n) transition", 900, c11_transition},
      {12, "estimator inequalities on rate runs", 1e9, c12_inequalities},
      {13, "byte-identical reruns", 1e9, c13_determinism},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      o.pass = false;
      o.detail += "; over runtime budget";
    }
    if (!o.pass) ++failed;
    std::printf("%s  criterion %2d  %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
