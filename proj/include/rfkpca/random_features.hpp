#pragma once

// Random feature maps Phi_m with E <Phi_m(x), Phi_m(y)> = k(x, y).
//
// m counts parameter draws; d is the feature dimension (2m for random
// Fourier features, m for finite-rank draws).

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rfkpca/kernels.hpp"
#include "rfkpca/linalg.hpp"
#include "rfkpca/points.hpp"

namespace rfkpca {

struct RffOptions {
  /// Test hook: use these frequencies (m x point_dim) instead of sampling.
  std::optional<Matrix> forced_omegas;
};

struct FiniteRankOptions {
  /// Test hook: draw every basis index exactly once with weight p_t, which
  /// reproduces the kernel exactly. m is then the kernel rank.
  bool deterministic = false;
};

class FeatureSample {
 public:
  enum class Variant { rff, finite_rank_draws, finite_rank_signs };

  Variant variant() const noexcept { return variant_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t d() const noexcept { return variant_ == Variant::rff ? 2 * m_ : m_; }
  double kappa_m() const noexcept { return kappa_m_; }
  std::uint64_t seed() const noexcept { return seed_; }

  const Matrix& omegas() const noexcept { return omegas_; }
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  /// Per-feature multiplier of psi_t for finite-rank draws.
  const std::vector<double>& coefficients() const noexcept { return coefs_; }
  /// m x T mixing matrix (already scaled) for sign features.
  const Matrix& mixing() const noexcept { return mixing_; }

  void eval(PointRef x, std::span<double> out) const;
  std::vector<double> eval(PointRef x) const;

  friend FeatureSample sample_rff(double, std::size_t, std::size_t, std::uint64_t,
                                  const RffOptions&);
  friend FeatureSample sample_finite_rank(const Kernel&, std::size_t, std::uint64_t,
                                          const FiniteRankOptions&);
  friend FeatureSample sample_finite_rank_signs(const Kernel&, std::size_t, std::uint64_t);

 private:
  Variant variant_ = Variant::rff;
  std::size_t m_ = 0;
  double kappa_m_ = 0.0;
  std::uint64_t seed_ = 0;
  Matrix omegas_;
  std::vector<std::size_t> indices_;
  std::vector<double> probs_;
  std::vector<double> coefs_;
  Matrix mixing_;
  std::shared_ptr<const FunctionTable> basis_;
};

FeatureSample sample_rff(double bandwidth, std::size_t point_dim, std::size_t m,
                         std::uint64_t seed, const RffOptions& options = {});

FeatureSample sample_finite_rank(const Kernel& k, std::size_t m, std::uint64_t seed,
                                 const FiniteRankOptions& options = {});

/// Finite-rank features phi(x, s) = sum_t sqrt(lambda_t) s_t psi_t(x) with
/// s uniform on {-1, +1}^T. Unbiased and bounded like the index draws, but
/// the resulting feature covariance is not diagonal in the psi basis, so its
/// eigenvectors fluctuate continuously with m.
FeatureSample sample_finite_rank_signs(const Kernel& k, std::size_t m, std::uint64_t seed);

Matrix feature_matrix(const FeatureSample& fs, const Points& points);

double approx_kernel(const FeatureSample& fs, PointRef x, PointRef y);

/// (1/m) sum_i cos<x - y, omega_i>; random Fourier features only.
double rff_cosine_form(const FeatureSample& fs, PointRef x, PointRef y);

}  // namespace rfkpca
