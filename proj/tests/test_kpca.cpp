#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rfkpca/discrete_oracle.hpp"
#include "rfkpca/kpca.hpp"
#include "rfkpca/rng.hpp"
#include "test_util.hpp"

using namespace rfkpca;

namespace {

// Empirical covariance of the explicit features (sqrt(lambda_t) psi_t(x))_t.
Matrix explicit_covariance(const Kernel& k, const Points& s) {
  const std::size_t T = k.lambdas().size(), n = s.size();
  Matrix f(n, T);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < T; ++t)
      f(i, t) = std::sqrt(k.lambdas()[t]) * k.basis().values(t, s[i].atom);
  std::vector<double> mean(T, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < T; ++t) mean[t] += f(i, t) / static_cast<double>(n);
  Matrix c(T, T);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < T; ++a)
      for (std::size_t b = 0; b < T; ++b)
        c(a, b) += (f(i, a) - mean[a]) * (f(i, b) - mean[b]) / static_cast<double>(n);
  return c;
}

class FiniteRankSetup : public ::testing::Test {
 protected:
  DiscreteMeasure mu = DiscreteMeasure::uniform(40);
  Kernel k = make_finite_rank_kernel(mu, poly_spectrum(2.0, 8), 21);
};

}  // namespace

TEST_F(FiniteRankSetup, GramRouteMatchesExplicitCovariance) {
  for (std::size_t n : {20u, 50u, 100u}) {
    const Points s = draw_samples(mu, n, 1000 + n);
    const KpcaModel model = fit_exact(k, s);
    const std::vector<double> ref = oracle::jacobi_eigenvalues(explicit_covariance(k, s));
    ASSERT_LE(model.rank(), ref.size());
    for (std::size_t i = 0; i < model.rank(); ++i) {
      EXPECT_NEAR(model.eigvals[i], ref[i], 1e-8 * ref[i]) << "n=" << n;
    }
    for (std::size_t i = 0; i < model.rank(); ++i)
      for (std::size_t j = 0; j < model.rank(); ++j) {
        const auto& gi = model.dual_coeffs[i];
        const auto& gj = model.dual_coeffs[j];
        double q = 0.0;
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = 0; b < n; ++b) q += gi[a] * model.gram(a, b) * gj[b];
        EXPECT_NEAR(q / (static_cast<double>(n) * model.eigvals[i]), i == j ? 1.0 : 0.0, 1e-8);
      }
  }
}

TEST_F(FiniteRankSetup, CompressedRouteEqualsDirectRoute) {
  const Points s = draw_samples(mu, 150, 5);  // many repeats on 40 atoms
  const KpcaModel direct = fit_exact(k, s);
  const KpcaModel packed = fit_exact_compressed(k, s);
  ASSERT_EQ(direct.rank(), packed.rank());
  EXPECT_LT(packed.train_points.size(), s.size());
  for (std::size_t i = 0; i < direct.rank(); ++i) {
    EXPECT_NEAR(direct.eigvals[i], packed.eigvals[i], 1e-12);
    const auto a = eigenfunction_eval(direct, k, i, mu.atoms());
    const auto b = eigenfunction_eval(packed, k, i, mu.atoms());
    EXPECT_LE(oracle::diff_up_to_sign(a, b), 1e-8) << "i=" << i;
  }
  const KpcaModel bare = fit_exact_gram(gram(k, s));
  for (std::size_t i = 0; i < direct.rank(); ++i) EXPECT_NEAR(bare.eigvals[i], direct.eigvals[i], 1e-12);
  EXPECT_EQ(kind_of([&] { eigenfunction_eval(bare, k, 0, mu.atoms()); }), ErrorKind::input);
}

TEST_F(FiniteRankSetup, ExactFeaturesReproduceEkpca) {
  FiniteRankOptions opt;
  opt.deterministic = true;
  const FeatureSample fs = sample_finite_rank(k, 0, 0, opt);
  for (std::uint64_t run = 0; run < 10; ++run) {
    const Points s = draw_samples(mu, 60, run);
    const KpcaModel ek = fit_exact_compressed(k, s);
    const RfKpcaModel rf = fit_rf(fs, s);
    ASSERT_EQ(ek.rank(), rf.rank());
    for (std::size_t i = 0; i < ek.rank(); ++i) {
      EXPECT_NEAR(ek.eigvals[i], rf.spectrum.eigenvalues[i], 1e-8);
    }
    const std::size_t ell = 3;
    for (std::size_t i = 0; i < ell; ++i) {
      std::vector<double> a, b;
      for (std::size_t x = 0; x < mu.size(); ++x) {
        a.push_back(embed_exact(ek, k, PointRef::of_atom(x), ell)[i]);
        b.push_back(embed_rf(rf, PointRef::of_atom(x), ell)[i]);
      }
      EXPECT_LE(oracle::diff_up_to_sign(a, b), 1e-6) << "run " << run << " i=" << i;
    }
  }
}

TEST_F(FiniteRankSetup, PrimalAndDualRfRoutesAgree) {
  const FeatureSample fs = sample_finite_rank_signs(k, 30, 9);
  const Points s = draw_samples(mu, 25, 2);
  const RfKpcaModel p = fit_rf(fs, s, RfRoute::primal);
  const RfKpcaModel d = fit_rf(fs, s, RfRoute::dual);
  ASSERT_EQ(p.rank(), d.rank());
  for (std::size_t i = 0; i < p.rank(); ++i) {
    EXPECT_NEAR(p.spectrum.eigenvalues[i], d.spectrum.eigenvalues[i], 1e-12);
    EXPECT_LE(oracle::diff_up_to_sign(p.spectrum.vector(i), d.spectrum.vector(i)), 1e-8);
  }
  // Retained eigenpairs reconstruct the empirical covariance.
  EXPECT_LE(oracle::max_abs_diff(p.spectrum.reconstruct().matrix(), p.emp_cov.matrix()), 1e-12);
}

TEST(Kpca, GaussianOnVectors) {
  Rng rng(4);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(30, 2);
  for (double& v : x.data()) v = normal(rng);
  const Points s = Points::vectors(x);
  const Kernel k = Kernel::gaussian(1.0);
  const KpcaModel m = fit_exact(k, s);
  // eigenvalues sum to tr(H K H) / n
  Matrix h = Matrix::identity(30);
  for (double& v : h.data()) v -= 1.0 / 30.0;
  const Matrix hkh = oracle::naive_matmul(oracle::naive_matmul(h, gram(k, s).matrix()), h);
  double tr = 0.0;
  for (std::size_t i = 0; i < 30; ++i) tr += hkh(i, i) / 30.0;
  double sum = 0.0;
  for (double v : m.eigvals) sum += v;
  EXPECT_NEAR(sum, tr, 1e-9);
  // unit RKHS norm: the empirical variance of phi_hat_1 is lambda_hat_1
  const auto f = eigenfunction_eval(m, k, 0, s);
  double mean = 0.0, var = 0.0;
  for (double v : f) mean += v / 30.0;
  for (double v : f) var += (v - mean) * (v - mean) / 30.0;
  EXPECT_NEAR(var, m.eigvals[0], 1e-9 * m.eigvals[0]);
}

TEST(Kpca, DegenerateAndTooSmallInputs) {
  const Kernel k = Kernel::gaussian(1.0);
  const Points same = Points::vectors(Matrix::from_rows({{1, 1}, {1, 1}, {1, 1}}));
  EXPECT_EQ(kind_of([&] { fit_exact(k, same); }), ErrorKind::degenerate);
  const Points one = Points::vectors(Matrix::from_rows({{1, 1}}));
  EXPECT_EQ(kind_of([&] { fit_exact(k, one); }), ErrorKind::input);
}
