#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rfkpca/kernels.hpp"
#include "rfkpca/random_features.hpp"
#include "rfkpca/rng.hpp"
#include "test_util.hpp"

using namespace rfkpca;

namespace {

Matrix random_points(std::uint64_t seed, std::size_t n, std::size_t dim) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(n, dim);
  for (double& v : m.data()) v = normal(rng);
  return m;
}

}  // namespace

TEST(Rff, CosineFormEqualsInnerProductAndUnitNorm) {
  const Points pts = Points::vectors(random_points(5, 200, 3));
  for (std::size_t m : {1u, 8u, 64u}) {
    const FeatureSample fs = sample_rff(1.3, 3, m, 99);
    EXPECT_EQ(fs.d(), 2 * m);
    for (std::size_t p = 0; p < 100; ++p) {
      const PointRef x = pts[2 * p], y = pts[2 * p + 1];
      EXPECT_NEAR(approx_kernel(fs, x, y), rff_cosine_form(fs, x, y), 1e-12);
      const auto phi = fs.eval(x);
      double sq = 0.0;
      for (double v : phi) sq += v * v;
      EXPECT_NEAR(sq, 1.0, 1e-15);
    }
  }
}

TEST(Rff, ConvergesToGaussianKernel) {
  const Points pts = Points::vectors(random_points(6, 10, 2));
  const Kernel k = Kernel::gaussian(1.0);
  const FeatureSample fs = sample_rff(1.0, 2, 20000, 3);
  for (std::size_t i = 0; i + 1 < 10; ++i) {
    EXPECT_NEAR(approx_kernel(fs, pts[i], pts[i + 1]), k(pts[i], pts[i + 1]), 0.03);
  }
}

TEST(Rff, SeedingAndForcedFrequencies) {
  EXPECT_EQ(sample_rff(1.0, 2, 5, 7).omegas(), sample_rff(1.0, 2, 5, 7).omegas());
  EXPECT_NE(sample_rff(1.0, 2, 5, 7).omegas(), sample_rff(1.0, 2, 5, 8).omegas());
  RffOptions opt;
  opt.forced_omegas = Matrix::from_rows({{0.0, 0.0}});
  const FeatureSample fs = sample_rff(1.0, 2, 1, 0, opt);
  const std::vector<double> x = {0.3, -2.0};
  const auto phi = fs.eval(PointRef::of_coords(x));
  EXPECT_EQ(phi[0], 1.0);
  EXPECT_EQ(phi[1], 0.0);
  opt.forced_omegas = Matrix(2, 2);
  EXPECT_EQ(kind_of([&] { sample_rff(1.0, 2, 1, 0, opt); }), ErrorKind::dimension);
  EXPECT_EQ(kind_of([&] { fs.eval(PointRef::of_atom(0)); }), ErrorKind::domain);
}

class FiniteRankFeatures : public ::testing::Test {
 protected:
  DiscreteMeasure mu = DiscreteMeasure::uniform(12);
  Kernel k = make_finite_rank_kernel(mu, poly_spectrum(2.0, 5), 4);
};

TEST_F(FiniteRankFeatures, DeterministicModeReproducesKernel) {
  FiniteRankOptions opt;
  opt.deterministic = true;
  const FeatureSample fs = sample_finite_rank(k, 0, 1, opt);
  EXPECT_EQ(fs.m(), 5u);
  for (std::size_t a = 0; a < 12; ++a)
    for (std::size_t b = 0; b < 12; ++b) {
      EXPECT_NEAR(approx_kernel(fs, PointRef::of_atom(a), PointRef::of_atom(b)),
                  k(PointRef::of_atom(a), PointRef::of_atom(b)), 1e-13);
    }
}

TEST_F(FiniteRankFeatures, BothRandomFamiliesAreUnbiasedAndBounded) {
  const PointRef x = PointRef::of_atom(3), y = PointRef::of_atom(7);
  const double target = k(x, y);
  for (int family = 0; family < 2; ++family) {
    double mean = 0.0;
    const int trials = 4000;
    for (int s = 0; s < trials; ++s) {
      const FeatureSample fs = family == 0 ? sample_finite_rank(k, 4, s)
                                           : sample_finite_rank_signs(k, 4, s);
      mean += approx_kernel(fs, x, y);
      if (s < 50) {
        for (std::size_t a = 0; a < 12; ++a) {
          const auto phi = fs.eval(PointRef::of_atom(a));
          double sq = 0.0;
          for (double v : phi) sq += v * v;
          EXPECT_LE(sq, fs.kappa_m() * (1 + 1e-12));
        }
      }
    }
    mean /= trials;
    EXPECT_NEAR(mean, target, 0.05 * k.kappa()) << "family " << family;
  }
}

TEST_F(FiniteRankFeatures, VariantChecks) {
  EXPECT_EQ(kind_of([] { sample_finite_rank(Kernel::gaussian(1.0), 3, 0); }), ErrorKind::type);
  EXPECT_EQ(kind_of([] { sample_finite_rank_signs(Kernel::gaussian(1.0), 3, 0); }),
            ErrorKind::type);
  const FeatureSample fs = sample_finite_rank(k, 3, 0);
  EXPECT_EQ(kind_of([&] { fs.eval(PointRef::of_atom(12)); }), ErrorKind::domain);
  EXPECT_EQ(kind_of([&] { rff_cosine_form(fs, PointRef::of_atom(0), PointRef::of_atom(1)); }),
            ErrorKind::type);
}
