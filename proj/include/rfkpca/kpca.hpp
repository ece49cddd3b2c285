#pragma once

// Empirical kernel PCA through the Gram matrix, and random-feature kernel
// PCA through the empirical feature covariance.

#include <cstddef>
#include <vector>

#include "rfkpca/kernels.hpp"
#include "rfkpca/linalg.hpp"
#include "rfkpca/points.hpp"
#include "rfkpca/random_features.hpp"

namespace rfkpca {

/// phi_hat_i = (1 / sqrt(n lambda_hat_i)) sum_j gamma_ij k(., x_j), where x_j
/// runs over `train_points`. For a compressed fit the train points are the
/// distinct sample values and gamma_ij already aggregates the duplicates.
struct KpcaModel {
  Points train_points;
  std::vector<double> train_weights;  // empirical mass of each train point
  std::size_t sample_count = 0;       // n
  SymMatrix gram;                     // K on train_points
  std::vector<double> eigvals;        // lambda_hat, descending, above rank tolerance
  std::vector<std::vector<double>> dual_coeffs;

  std::size_t rank() const noexcept { return eigvals.size(); }
  /// Coefficients c_i = gamma_i / sqrt(n lambda_hat_i) of phi_hat_i.
  std::vector<double> expansion(std::size_t i) const;
};

/// Direct route: eigendecomposes H_n K H_n over all n samples.
KpcaModel fit_exact(const Kernel& k, const Points& samples);

/// Same estimator from a precomputed Gram matrix; the model carries no points.
KpcaModel fit_exact_gram(const SymMatrix& K);

/// Same estimator computed on the distinct sample values only. With counts c_a
/// and w_a = c_a / n this eigendecomposes W^{1/2} Kbar W^{1/2}; the spectrum
/// and eigenfunctions coincide with `fit_exact` on the full sample.
KpcaModel fit_exact_compressed(const Kernel& k, const Points& samples);

/// Weighted core shared by all three entry points.
KpcaModel fit_weighted(SymMatrix K, std::vector<double> weights, std::size_t sample_count);

/// phi_hat_i at each point (i is zero-based).
std::vector<double> eigenfunction_eval(const KpcaModel& model, const Kernel& k, std::size_t i,
                                       const Points& points);

/// points x count matrix of phi_hat_0..phi_hat_{count-1}.
Matrix eigenfunction_matrix(const KpcaModel& model, const Kernel& k, std::size_t count,
                            const Points& points);

std::vector<double> embed_exact(const KpcaModel& model, const Kernel& k, PointRef x,
                                std::size_t ell);

struct RfKpcaModel {
  FeatureSample features;
  SymMatrix emp_cov;               // Sigma_hat_m, d x d
  Spectrum spectrum;               // retained eigenpairs of emp_cov (d x rank)
  std::vector<double> emp_mean;    // mu_hat
  std::size_t sample_count = 0;

  std::size_t rank() const noexcept { return spectrum.size(); }
};

enum class RfRoute {
  automatic,  // dual when there are fewer distinct samples than features
  primal,     // eigendecompose the d x d covariance
  dual,       // eigendecompose the k x k weighted centered feature Gram
};

RfKpcaModel fit_rf(const FeatureSample& fs, const Points& samples,
                   RfRoute route = RfRoute::automatic);

/// <Phi_m(x), phi_hat_{m,i}> for i < ell; with `centered`, mu_hat is
/// subtracted from Phi_m(x) first.
std::vector<double> embed_rf(const RfKpcaModel& model, PointRef x, std::size_t ell,
                             bool centered = false);

/// Population feature covariance under a discrete measure.
SymMatrix pop_rf_cov(const FeatureSample& fs, const DiscreteMeasure& measure);

}  // namespace rfkpca
