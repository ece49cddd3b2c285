#pragma once

// Exact population quantities for a finite-support measure.
//
// L2(P) functions are represented by u = W^{1/2} f (f = values on the atoms),
// so L2(P) inner products, Hilbert-Schmidt norms and operator norms become
// the plain Euclidean ones. In these coordinates
//   JJ* = W^{1/2} (I - 1 w^T) K (I - w 1^T) W^{1/2},
//   AA* = W^{1/2} Fbar Fbar^T W^{1/2},   Fbar = (I - 1 w^T) F.

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "rfkpca/kernels.hpp"
#include "rfkpca/kpca.hpp"
#include "rfkpca/linalg.hpp"
#include "rfkpca/points.hpp"
#include "rfkpca/random_features.hpp"

namespace rfkpca {

struct PopOperator {
  enum class Kind { jj_star, aa_star };

  SymMatrix sym_matrix;
  Spectrum spectrum;
  Kind kind = Kind::jj_star;
};

struct ProjectionLike {
  SymMatrix sym_matrix;
  bool is_orthogonal_projector = false;
};

PopOperator op_jj(const Kernel& k, const DiscreteMeasure& measure);
/// From a Gram matrix already evaluated on the atoms.
PopOperator op_jj_gram(const SymMatrix& K_atoms, const std::vector<double>& weights);
PopOperator op_aa(const FeatureSample& fs, const DiscreteMeasure& measure);

/// sum_{i >= ell} lambda_i^2 over the retained (numerically nonzero) spectrum.
double tail_energy(const Spectrum& spec, std::size_t ell);

ProjectionLike proj_pop(const PopOperator& op, std::size_t ell);

/// J Sigma_hat_ell^{-1} J* for an exact KPCA model.
ProjectionLike proj_hat(const KpcaModel& model, const Kernel& k, const DiscreteMeasure& measure,
                        std::size_t ell);

/// A Sigma_hat_{m,ell}^{-1} A* for a random-feature model.
ProjectionLike proj_hat_rf(const RfKpcaModel& model, const DiscreteMeasure& measure,
                           std::size_t ell);

enum class ReconVariant { pop, hat, rf_pop, rf_hat };

/// ||(I - Q) S_J||_HS^2
double recon_error(ReconVariant variant, const PopOperator& s_j, const ProjectionLike& q);

/// ||P - Q||_op
double proj_distance(const ProjectionLike& p, const ProjectionLike& q);

/// n i.i.d. categorical draws; zero weights are allowed here.
std::vector<std::size_t> draw_indices(const std::vector<double>& weights, std::size_t n,
                                      std::uint64_t seed);

Points draw_samples(const DiscreteMeasure& measure, std::size_t n, std::uint64_t seed);

/// Measure, kernel description and population spectrum as JSON.
nlohmann::json oracle_snapshot(const Kernel& k, const DiscreteMeasure& measure,
                               const PopOperator& s_j);

}  // namespace rfkpca
