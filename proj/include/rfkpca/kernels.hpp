#pragma once

// Kernels and Gram matrices. Two variants: the Gaussian kernel on real
// vectors and a finite-rank kernel k(z_a, z_b) = sum_t lambda_t psi_t(z_a) psi_t(z_b)
// on the atoms of a discrete measure, whose covariance spectrum is exactly
// the prescribed lambdas.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "rfkpca/linalg.hpp"
#include "rfkpca/points.hpp"

namespace rfkpca {

/// Row t holds psi_t at every atom. Rows are orthonormal in the weighted
/// pairing sum_j w_j psi_s(z_j) psi_t(z_j) and orthogonal to constants.
struct FunctionTable {
  std::vector<double> weights;  // the measure the rows are orthonormal under
  Matrix values;                // T x N

  std::size_t rank() const noexcept { return values.rows(); }
  std::size_t atom_count() const noexcept { return values.cols(); }
};

class Kernel {
 public:
  enum class Variant { gaussian, finite_rank };

  static Kernel gaussian(double bandwidth);
  static Kernel finite_rank(FunctionTable basis, std::vector<double> lambdas);

  Variant variant() const noexcept { return variant_; }
  double bandwidth() const noexcept { return bandwidth_; }
  double kappa() const noexcept { return kappa_; }

  /// Finite-rank only.
  const FunctionTable& basis() const;
  const std::vector<double>& lambdas() const noexcept { return lambdas_; }

  double operator()(PointRef x, PointRef y) const;

 private:
  Variant variant_ = Variant::gaussian;
  double bandwidth_ = 1.0;
  double kappa_ = 1.0;
  std::shared_ptr<const FunctionTable> basis_;
  std::vector<double> lambdas_;
};

double kernel_eval(const Kernel& k, PointRef x, PointRef y);

SymMatrix gram(const Kernel& k, const Points& points);

/// [k(a_i, b_j)]
Matrix cross_gram(const Kernel& k, const Points& a, const Points& b);

/// (I - 1 w^T) K (I - w 1^T)
SymMatrix center_gram(const SymMatrix& K, std::span<const double> weights);

/// Seeded construction of a finite-rank kernel on `measure` with covariance
/// eigenvalues exactly `lambdas`.
Kernel make_finite_rank_kernel(const DiscreteMeasure& measure, const std::vector<double>& lambdas,
                               std::uint64_t seed);

std::vector<double> poly_spectrum(double alpha, std::size_t count);
std::vector<double> expo_spectrum(double gamma, std::size_t count);

}  // namespace rfkpca
