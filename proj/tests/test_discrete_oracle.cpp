#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "rfkpca/discrete_oracle.hpp"
#include "test_util.hpp"

using namespace rfkpca;

namespace {

// E_X || k_bar(., X) - sum_i <k_bar(., X), v_i> v_i ||^2 in L2(P), with the
// expectation and inner products written out atom by atom.
double residual_expectation(const SymMatrix& kbar, const std::vector<double>& w,
                            const std::vector<std::vector<double>>& vs) {
  const std::size_t N = w.size();
  double total = 0.0;
  for (std::size_t a = 0; a < N; ++a) {
    std::vector<double> r(N);
    for (std::size_t j = 0; j < N; ++j) r[j] = kbar(j, a);
    for (const auto& v : vs) {
      double ip = 0.0;
      for (std::size_t j = 0; j < N; ++j) ip += w[j] * kbar(j, a) * v[j];
      for (std::size_t j = 0; j < N; ++j) r[j] -= ip * v[j];
    }
    double sq = 0.0;
    for (std::size_t j = 0; j < N; ++j) sq += w[j] * r[j] * r[j];
    total += w[a] * sq;
  }
  return total;
}

std::vector<double> centered(std::vector<double> f, const std::vector<double>& w, double scale) {
  double mean = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) mean += w[j] * f[j];
  for (double& v : f) v = (v - mean) * scale;
  return f;
}

class OracleSetup : public ::testing::Test {
 protected:
  DiscreteMeasure mu = DiscreteMeasure::uniform(128);
  Kernel k = make_finite_rank_kernel(mu, poly_spectrum(2.0, 40), 77);
  PopOperator s_j = op_jj(k, mu);
};

}  // namespace

TEST_F(OracleSetup, PopulationReconstructionEqualsTailEnergy) {
  for (std::size_t ell = 1; ell <= 20; ++ell) {
    const double tail = tail_energy(s_j.spectrum, ell);
    const double recon = recon_error(ReconVariant::pop, s_j, proj_pop(s_j, ell));
    EXPECT_NEAR(recon, tail, 1e-10 * tail) << "ell=" << ell;
    double direct = 0.0;
    for (std::size_t i = ell; i < 40; ++i) direct += std::pow(i + 1.0, -4.0);
    EXPECT_NEAR(tail, direct, 1e-10 * direct);
  }
}

TEST_F(OracleSetup, ReconstructionMatchesResidualExpectation) {
  const Points s = draw_samples(mu, 300, 4);
  const KpcaModel model = fit_exact_compressed(k, s);
  const SymMatrix kbar = center_gram(gram(k, mu.atoms()), mu.weights());
  for (std::size_t ell : {1u, 3u, 6u}) {
    std::vector<std::vector<double>> vs;
    for (std::size_t i = 0; i < ell; ++i) {
      vs.push_back(centered(eigenfunction_eval(model, k, i, mu.atoms()), mu.weights(),
                            1.0 / std::sqrt(model.eigvals[i])));
    }
    const double direct = residual_expectation(kbar, mu.weights(), vs);
    const double via_operator =
        recon_error(ReconVariant::hat, s_j, proj_hat(model, k, mu, ell));
    EXPECT_NEAR(via_operator, direct, 1e-10 * direct) << "ell=" << ell;
  }

  const FeatureSample fs = sample_finite_rank_signs(k, 50, 8);
  const RfKpcaModel rf = fit_rf(fs, s);
  const std::size_t ell = 4;
  std::vector<std::vector<double>> vs;
  for (std::size_t i = 0; i < ell; ++i) {
    std::vector<double> f(mu.size());
    for (std::size_t a = 0; a < mu.size(); ++a) {
      const auto phi = fs.eval(PointRef::of_atom(a));
      for (std::size_t j = 0; j < phi.size(); ++j) f[a] += phi[j] * rf.spectrum.eigenvectors(j, i);
    }
    vs.push_back(centered(f, mu.weights(), 1.0 / std::sqrt(rf.spectrum.eigenvalues[i])));
  }
  const double direct = residual_expectation(kbar, mu.weights(), vs);
  EXPECT_NEAR(recon_error(ReconVariant::rf_hat, s_j, proj_hat_rf(rf, mu, ell)), direct,
              1e-10 * direct);
}

TEST_F(OracleSetup, FullAtomSampleRecoversPopulation) {
  // One draw per atom reproduces the uniform measure, so Sigma_hat = Sigma.
  const KpcaModel model = fit_exact_compressed(k, mu.atoms());
  for (std::size_t ell : {1u, 5u, 12u}) {
    const ProjectionLike p = proj_pop(s_j, ell);
    const ProjectionLike q = proj_hat(model, k, mu, ell);
    EXPECT_LE(proj_distance(p, q), 1e-8);
    EXPECT_NEAR(recon_error(ReconVariant::hat, s_j, q), tail_energy(s_j.spectrum, ell),
                1e-10 * tail_energy(s_j.spectrum, ell));
  }
}

TEST_F(OracleSetup, ExactFeaturesGiveTheSameOperators) {
  FiniteRankOptions opt;
  opt.deterministic = true;
  const FeatureSample fs = sample_finite_rank(k, 0, 0, opt);
  const PopOperator s_a = op_aa(fs, mu);
  EXPECT_LE(oracle::max_abs_diff(s_a.sym_matrix.matrix(), s_j.sym_matrix.matrix()), 1e-12);
  const Points s = draw_samples(mu, 200, 5);
  const KpcaModel model = fit_exact_compressed(k, s);
  const RfKpcaModel rf = fit_rf(fs, s);
  for (std::size_t ell : {2u, 7u}) {
    EXPECT_LE(oracle::max_abs_diff(proj_hat(model, k, mu, ell).sym_matrix.matrix(),
                                   proj_hat_rf(rf, mu, ell).sym_matrix.matrix()),
              1e-8);
  }
}

TEST_F(OracleSetup, ProjectionShapes) {
  const ProjectionLike p = proj_pop(s_j, 4);
  EXPECT_TRUE(p.is_orthogonal_projector);
  EXPECT_NEAR(p.sym_matrix.trace(), 4.0, 1e-12);
  EXPECT_EQ(proj_distance(p, p), 0.0);
  const Points s = draw_samples(mu, 50, 1);
  const KpcaModel model = fit_exact_compressed(k, s);
  EXPECT_FALSE(proj_hat(model, k, mu, 3).is_orthogonal_projector);
  EXPECT_EQ(kind_of([&] { proj_hat(model, k, mu, model.rank() + 1); }), ErrorKind::rank);
}

TEST(Sampling, SeededFrequenciesAndZeroWeights) {
  const std::vector<double> w = {0.5, 0.0, 0.3, 0.2};
  EXPECT_EQ(draw_indices(w, 100, 3), draw_indices(w, 100, 3));
  const auto idx = draw_indices(w, 20000, 4);
  std::vector<double> freq(4, 0.0);
  for (std::size_t i : idx) freq[i] += 1.0 / 20000.0;
  EXPECT_EQ(freq[1], 0.0);
  EXPECT_NEAR(freq[0], 0.5, 0.02);
  EXPECT_NEAR(freq[2], 0.3, 0.02);
  EXPECT_EQ(kind_of([&] { draw_indices(w, 0, 1); }), ErrorKind::input);
  EXPECT_EQ(kind_of([] { draw_indices({0.5, 0.6}, 3, 1); }), ErrorKind::input);
}

TEST_F(OracleSetup, SnapshotContents) {
  const auto j = oracle_snapshot(k, mu, s_j);
  EXPECT_EQ(j["schema"], "rfkpca.oracle_snapshot/1");
  EXPECT_EQ(j["population_spectrum"].size(), 40u);
  EXPECT_EQ(j["kernel"]["rank"], 40);
  EXPECT_NEAR(j["trace"].get<double>(), s_j.sym_matrix.trace(), 0.0);
}
