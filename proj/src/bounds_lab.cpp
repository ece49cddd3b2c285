#include "rfkpca/bounds_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "rfkpca/discrete_oracle.hpp"
#include "rfkpca/error.hpp"
#include "rfkpca/kernels.hpp"
#include "rfkpca/random_features.hpp"
#include "rfkpca/simd.hpp"
#include "rfkpca/task_pool.hpp"

namespace rfkpca {
namespace {

double hs(const SymMatrix& a) { return frobenius_norm(a.matrix()); }
double op(const SymMatrix& a) { return matrix_norm(a, NormKind::operator_norm); }

double min_eigenvalue(const SymMatrix& a) { return sym_eig(a).eigenvalues.back(); }

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

struct Tally {
  std::size_t checks = 0;
  std::size_t violations = 0;
  double min_margin = std::numeric_limits<double>::infinity();

  void add(double lhs, double rhs) {
    ++checks;
    if (!within_slack(lhs, rhs)) ++violations;
    min_margin = std::min(min_margin, rhs - lhs);
  }
};

}  // namespace

bool within_slack(double lhs, double rhs) noexcept { return lhs <= rhs + 1e-9 * (1.0 + rhs); }

Matrix random_orthogonal(Rng& rng, std::size_t n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix q(n, n);  // rows are the orthonormal vectors
  for (std::size_t i = 0; i < n; ++i) {
    while (true) {
      for (double& v : q.row(i)) v = normal(rng);
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < i; ++j) simd::axpy(-simd::dot(q.row(i), q.row(j)), q.row(j), q.row(i));
      }
      const double nrm = std::sqrt(simd::dot(q.row(i), q.row(i)));
      if (nrm > 1e-8) {
        simd::scale(1.0 / nrm, q.row(i));
        break;
      }
    }
  }
  return q;
}

SymMatrix random_symmetric(Rng& rng, std::size_t n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = normal(rng);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return SymMatrix(std::move(m));
}

SymMatrix random_psd(Rng& rng, std::size_t n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(n, n);
  for (double& v : g.data()) v = normal(rng);
  return (1.0 / static_cast<double>(n)) * SymMatrix::symmetrized(matmul_abt(g, g));
}

PerturbationCase make_case(SymMatrix A, SymMatrix B, std::size_t D) {
  if (A.dim() != B.dim()) fail(ErrorKind::dimension, "perturbation case: A and B differ in size");
  const Spectrum sa = sym_eig(A);
  if (D < 1 || D >= A.dim()) fail(ErrorKind::precondition, "perturbation case: need 1 <= D < dim");
  const double scale = std::max(1.0, std::abs(sa.eigenvalues.front()));
  if (sa.eigenvalues.back() < -1e-10 * scale) fail(ErrorKind::precondition, "A is not PSD");
  for (std::size_t i = 0; i + 1 < sa.size(); ++i) {
    if (sa.eigenvalues[i] - sa.eigenvalues[i + 1] <= 1e-12 && sa.eigenvalues[i] > 1e-10 * scale) {
      fail(ErrorKind::precondition, "A has a repeated nonzero eigenvalue");
    }
  }
  if (!(sa.eigenvalues[D - 1] > 0.0)) fail(ErrorKind::precondition, "lambda_D(A) must be positive");
  PerturbationCase c;
  c.D = D;
  c.delta_D = 0.5 * (sa.eigenvalues[D - 1] - sa.eigenvalues[D]);
  if (hs(B) > 0.5 * c.delta_D * (1.0 + 1e-12)) {
    fail(ErrorKind::precondition, "||B||_HS exceeds delta_D / 2");
  }
  const SymMatrix ab = A + B;
  if (min_eigenvalue(ab) < -1e-10 * std::max(1.0, op(ab))) {
    fail(ErrorKind::precondition, "A + B is not PSD");
  }
  c.A = std::move(A);
  c.B = std::move(B);
  return c;
}

PerturbationCase generate_case(Rng& rng, std::size_t dim, std::size_t D) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (true) {
    // Simple, gapped, positive spectrum: suffix sums of positive increments.
    // Flat increments give near-linear spectra; decaying ones give power-law
    // spectra, where the weighted bound is the sharper one.
    std::vector<double> inc(dim);
    const double decay = unit(rng) < 0.5 ? 0.0 : 1.5 + 2.0 * unit(rng);
    for (std::size_t i = 0; i < dim; ++i) {
      inc[i] = (0.1 + 0.9 * unit(rng)) * std::pow(static_cast<double>(i + 1), -decay);
    }
    std::vector<double> lam(dim);
    double acc = 0.0;
    for (std::size_t i = dim; i-- > 0;) {
      acc += inc[i];
      lam[i] = acc;
    }
    for (double& v : lam) v /= acc;
    const Matrix q = random_orthogonal(rng, dim);
    Matrix ql = q.transpose();  // columns are eigenvectors
    for (std::size_t r = 0; r < dim; ++r)
      for (std::size_t c = 0; c < dim; ++c) ql(r, c) *= lam[c];
    const SymMatrix A = SymMatrix::symmetrized(matmul(ql, q));
    const double delta = 0.5 * (lam[D - 1] - lam[D]);
    for (int attempt = 0; attempt < 100; ++attempt) {
      const SymMatrix raw = random_symmetric(rng, dim);
      const double rho = 1.0 - unit(rng);  // (0, 1]
      const SymMatrix B = (rho * delta / 2.0 / hs(raw)) * raw;
      if (min_eigenvalue(A + B) >= -1e-10) return make_case(A, B, D);
    }
  }
}

BoundReport perturb_check(const PerturbationCase& c) {
  const SymMatrix& A = c.A;
  const Spectrum sa = sym_eig(A);
  const Spectrum sab = sym_eig(A + c.B);
  const SymMatrix diff = spectral_projector(sa, c.D) - spectral_projector(sab, c.D);
  const SymMatrix root = fractional_power(A, 0.5);
  const SymMatrix weighted =
      SymMatrix::symmetrized(matmul(matmul(root.matrix(), diff.matrix()), root.matrix()));
  const double b = hs(c.B);
  BoundReport r;
  r.lhs_i = hs(diff);
  r.rhs_i = b / c.delta_D;
  r.lhs_ii = hs(weighted);
  r.rhs_ii = b * static_cast<double>(c.D) * sa.eigenvalues[c.D - 1] / c.delta_D;
  r.trivial_rhs = sa.eigenvalues.front() * b / c.delta_D;
  r.holds_i = within_slack(r.lhs_i, r.rhs_i);
  r.holds_ii = within_slack(r.lhs_ii, r.rhs_ii);
  return r;
}

TensorCheck tensor_lemma_check(const std::vector<double>& f, const std::vector<double>& g) {
  if (f.size() != g.size()) fail(ErrorKind::dimension, "tensor lemma: vectors differ in length");
  const std::size_t n = f.size();
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d(i, j) = f[i] * f[j] - g[i] * g[j];
  const double nf = std::sqrt(simd::dot(f, f));
  const double ng = std::sqrt(simd::dot(g, g));
  TensorCheck t;
  t.lhs = frobenius_norm(d);
  t.rhs = std::sqrt(simd::sq_dist(f, g)) * std::sqrt(nf * nf + ng * ng + 4.0 * nf * ng);
  t.holds = t.lhs <= t.rhs + 1e-12 * (1.0 + t.rhs);
  return t;
}

bool rank_one_norms_check(const std::vector<double>& f) {
  const double sq = simd::dot(f, f);
  if (!(sq > 0.0)) fail(ErrorKind::input, "rank-one check needs a nonzero vector");
  const std::size_t n = f.size();
  Matrix b(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) b(i, j) = f[i] * f[j];
  const SymMatrix B = SymMatrix::symmetrized(b);
  const double tol = 1e-10 * std::max(1.0, sq);
  return std::abs(matrix_norm(B, NormKind::operator_norm) - sq) <= tol &&
         std::abs(matrix_norm(B, NormKind::hilbert_schmidt) - sq) <= tol &&
         std::abs(matrix_norm(B, NormKind::trace) - sq) <= tol;
}

double bernstein_bound(BernsteinKind kind, double eps_or_kappa, double tau, std::size_t s_or_m) {
  if (!(eps_or_kappa > 0.0) || !(tau > 0.0)) {
    fail(ErrorKind::input, "Bernstein bound needs positive scale and tau");
  }
  if (static_cast<double>(s_or_m) < 8.0 * tau) {
    fail(ErrorKind::precondition, "sample size " + std::to_string(s_or_m) + " is below 8 tau");
  }
  const double root = std::sqrt(2.0 * tau / static_cast<double>(s_or_m));
  switch (kind) {
    case BernsteinKind::cov_centered_mean: return 7.0 * eps_or_kappa * root;
    case BernsteinKind::cov_zero_mean: return 2.0 * eps_or_kappa * root;
    case BernsteinKind::feature_op: return 8.0 * eps_or_kappa * root;
  }
  return 0.0;
}

double bernstein_threshold(double B, double theta, double tau, std::size_t n) {
  const double nn = static_cast<double>(n);
  return 2.0 * B * tau / nn + std::sqrt(2.0 * theta * theta * tau / nn);
}

McTailResult mc_tail(TailExperiment experiment, const McTailConfig& cfg) {
  if (cfg.replications < 50) fail(ErrorKind::precondition, "mc_tail needs at least 50 replications");
  if (static_cast<double>(cfg.sample_size) < 8.0 * cfg.tau) {
    fail(ErrorKind::precondition, "mc_tail sample size is below 8 tau");
  }
  const DiscreteMeasure measure = DiscreteMeasure::uniform(cfg.atoms);
  const Kernel k = make_finite_rank_kernel(measure, poly_spectrum(cfg.alpha, cfg.rank),
                                           derive_seed(cfg.seed, "mc_tail_kernel"));
  McTailResult out;
  out.deviations.resize(cfg.replications);

  if (experiment == TailExperiment::cov_deviation) {
    const FeatureSample nu = sample_finite_rank(k, 0, 0, FiniteRankOptions{true});
    const SymMatrix C = pop_rf_cov(nu, measure);
    const double eps = k.kappa();
    out.bound = bernstein_bound(BernsteinKind::cov_centered_mean, eps, cfg.tau, cfg.sample_size);
    out.prob_bound = 4.0 * std::exp(-cfg.tau);
    parallel_for(cfg.replications, cfg.threads, [&](std::size_t rep) {
      const Points x = draw_samples(measure, cfg.sample_size, derive_seed(cfg.seed, "mc_tail_samples", {rep}));
      CompressedPoints c = compress(x);
      std::vector<double> w(c.counts.size());
      for (std::size_t a = 0; a < w.size(); ++a) {
        w[a] = static_cast<double>(c.counts[a]) / static_cast<double>(cfg.sample_size);
      }
      // The V-statistic covariance is the population covariance of the
      // empirical measure.
      const double s = std::accumulate(w.begin(), w.end(), 0.0);
      w.back() += 1.0 - s;
      const DiscreteMeasure empirical(std::move(c.points), std::move(w));
      out.deviations[rep] = hs(pop_rf_cov(nu, empirical) - C);
    });
  } else {
    const PopOperator sj = op_jj(k, measure);
    out.prob_bound = 2.0 * std::exp(-cfg.tau);
    std::vector<double> bounds(cfg.replications);
    parallel_for(cfg.replications, cfg.threads, [&](std::size_t rep) {
      const FeatureSample fs =
          sample_finite_rank(k, cfg.sample_size, derive_seed(cfg.seed, "mc_tail_features", {rep}));
      const PopOperator sa = op_aa(fs, measure);
      out.deviations[rep] = hs(sa.sym_matrix - sj.sym_matrix);
      bounds[rep] = bernstein_bound(BernsteinKind::feature_op, fs.kappa_m(), cfg.tau, cfg.sample_size);
    });
    out.bound = bounds.front();
  }
  std::size_t exceed = 0;
  for (double d : out.deviations) {
    if (d > out.bound) ++exceed;
    out.max_deviation = std::max(out.max_deviation, d);
  }
  out.exceed_fraction = static_cast<double>(exceed) / static_cast<double>(cfg.replications);
  out.median_deviation = median(out.deviations);
  return out;
}

nlohmann::json to_json(const SuiteReport& r) {
  nlohmann::json j = {{"suite", r.name},
                      {"cases", r.cases},
                      {"violations", r.violations},
                      {"min_margin", r.min_margin}};
  for (auto it = r.extra.begin(); it != r.extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

SuiteReport perturbation_suite(std::size_t cases, std::uint64_t seed, std::size_t min_dim,
                               std::size_t max_dim) {
  if (min_dim < 2 || max_dim < min_dim) fail(ErrorKind::input, "perturbation suite dimensions");
  Tally tally_i, tally_ii;
  std::size_t improved = 0;
  for (std::size_t c = 0; c < cases; ++c) {
    Rng rng = make_rng(seed, "perturbation_case", {c});
    std::uniform_int_distribution<std::size_t> pick_dim(min_dim, max_dim);
    const std::size_t dim = pick_dim(rng);
    std::uniform_int_distribution<std::size_t> pick_d(1, dim / 2);
    const std::size_t D = pick_d(rng);
    const BoundReport r = perturb_check(generate_case(rng, dim, D));
    tally_i.add(r.lhs_i, r.rhs_i);
    tally_ii.add(r.lhs_ii, r.rhs_ii);
    if (r.rhs_ii < r.trivial_rhs) ++improved;
  }
  SuiteReport rep;
  rep.name = "perturbation";
  rep.cases = cases;
  rep.violations = tally_i.violations + tally_ii.violations;
  rep.min_margin = std::min(tally_i.min_margin, tally_ii.min_margin);
  rep.extra["violations_i"] = tally_i.violations;
  rep.extra["violations_ii"] = tally_ii.violations;
  rep.extra["min_margin_i"] = tally_i.min_margin;
  rep.extra["min_margin_ii"] = tally_ii.min_margin;
  rep.extra["fraction_weighted_beats_trivial"] =
      cases ? static_cast<double>(improved) / static_cast<double>(cases) : 0.0;
  return rep;
}

SuiteReport operator_inequality_suite(std::size_t trials, std::uint64_t seed) {
  Tally eig, mono, lip;
  std::uniform_int_distribution<std::size_t> pick_dim(2, 12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_rng(seed, "operator_inequality", {t});
    const std::size_t n = pick_dim(rng);
    const SymMatrix A = random_psd(rng, n);
    SymMatrix B;
    if (t % 2 == 0) {
      B = random_psd(rng, n);
    } else {
      // Nearby pair: perturb A, then project back onto the PSD cone.
      const double size = unit(rng) * op(A);
      const SymMatrix E = random_symmetric(rng, n);
      Spectrum s = sym_eig(A + (size / std::max(hs(E), 1e-300)) * E);
      for (double& v : s.eigenvalues) v = std::max(v, 0.0);
      B = s.reconstruct();
    }
    const Spectrum sa = sym_eig(A);
    const Spectrum sb = sym_eig(B);
    const double dhs = hs(A - B);
    double l2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = sa.eigenvalues[i] - sb.eigenvalues[i];
      eig.add(std::abs(d), dhs);
      l2 += d * d;
    }
    eig.add(std::sqrt(l2), dhs);

    const double dop = op(A - B);
    for (double p : {0.25, 0.5, 0.75}) {
      mono.add(op(fractional_power(A, p) - fractional_power(B, p)), std::pow(dop, p));
    }
    const double top = std::max(op(A), op(B));
    for (double p : {1.5, 2.0}) {
      lip.add(hs(fractional_power(A, p) - fractional_power(B, p)), p * std::pow(top, p - 1.0) * dhs);
    }
  }
  SuiteReport rep;
  rep.name = "operator_inequalities";
  rep.cases = trials;
  rep.violations = eig.violations + mono.violations + lip.violations;
  rep.min_margin = std::min({eig.min_margin, mono.min_margin, lip.min_margin});
  rep.extra["violations_eigenvalues"] = eig.violations;
  rep.extra["violations_monotone_power"] = mono.violations;
  rep.extra["violations_lipschitz_power"] = lip.violations;
  return rep;
}

SuiteReport tensor_lemma_suite(std::size_t trials, std::uint64_t seed, std::size_t dim) {
  Tally tally;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_rng(seed, "tensor_lemma", {t});
    std::vector<double> f(dim), g(dim);
    const double sf = std::exp(4.0 * unit(rng) - 2.0);
    for (double& v : f) v = sf * normal(rng);
    if (t % 3 == 0) {
      // g close to f, the regime where the bound is tight.
      const double eps = std::exp(-6.0 * unit(rng));
      for (std::size_t i = 0; i < dim; ++i) g[i] = f[i] + eps * sf * normal(rng);
    } else {
      const double sg = std::exp(4.0 * unit(rng) - 2.0);
      for (double& v : g) v = sg * normal(rng);
    }
    const TensorCheck c = tensor_lemma_check(f, g);
    ++tally.checks;
    if (!c.holds) ++tally.violations;
    tally.min_margin = std::min(tally.min_margin, c.rhs - c.lhs);
  }
  SuiteReport rep;
  rep.name = "tensor_lemma";
  rep.cases = trials;
  rep.violations = tally.violations;
  rep.min_margin = tally.min_margin;
  return rep;
}

SuiteReport rank_one_suite(std::size_t trials, std::uint64_t seed, std::size_t dim) {
  std::size_t violations = 0;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_dim(1, dim);
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_rng(seed, "rank_one", {t});
    std::vector<double> f(pick_dim(rng));
    for (double& v : f) v = normal(rng);
    if (!rank_one_norms_check(f)) ++violations;
  }
  SuiteReport rep;
  rep.name = "rank_one_norms";
  rep.cases = trials;
  rep.violations = violations;
  rep.min_margin = 0.0;
  return rep;
}

}  // namespace rfkpca
