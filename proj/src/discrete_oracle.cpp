#include "rfkpca/discrete_oracle.hpp"

#include <cmath>
#include <random>
#include <string>

#include "rfkpca/error.hpp"
#include "rfkpca/rng.hpp"
#include "rfkpca/simd.hpp"

namespace rfkpca {
namespace {

void check_dims(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    fail(ErrorKind::dimension, std::string(what) + ": " + std::to_string(a) + " vs " +
                                   std::to_string(b));
  }
}

// Centers f with the weights and returns W^{1/2}(f - <f, 1>_w).
std::vector<double> to_sym_coords(std::vector<double> f, const std::vector<double>& w) {
  const double mean = simd::dot(f, w);
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = std::sqrt(w[j]) * (f[j] - mean);
  return f;
}

SymMatrix sum_of_outer(const std::vector<std::vector<double>>& vs,
                       const std::vector<double>& scale, std::size_t dim) {
  Matrix out(dim, dim);
  for (std::size_t v = 0; v < vs.size(); ++v) {
    const auto& x = vs[v];
    for (std::size_t i = 0; i < dim; ++i) {
      const double a = scale[v] * x[i];
      if (a != 0.0) simd::axpy(a, std::span<const double>(x).subspan(i), out.row(i).subspan(i));
    }
  }
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < i; ++j) out(i, j) = out(j, i);
  return SymMatrix(std::move(out));
}

}  // namespace

PopOperator op_jj_gram(const SymMatrix& K_atoms, const std::vector<double>& weights) {
  check_dims(K_atoms.dim(), weights.size(), "op_jj weights");
  const SymMatrix kbar = center_gram(K_atoms, weights);
  const std::size_t n = kbar.dim();
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = std::sqrt(weights[i]) * kbar(i, j) * std::sqrt(weights[j]);
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  PopOperator op;
  op.kind = PopOperator::Kind::jj_star;
  op.sym_matrix = SymMatrix(std::move(s));
  op.spectrum = sym_eig(op.sym_matrix);
  return op;
}

PopOperator op_jj(const Kernel& k, const DiscreteMeasure& measure) {
  return op_jj_gram(gram(k, measure.atoms()), measure.weights());
}

PopOperator op_aa(const FeatureSample& fs, const DiscreteMeasure& measure) {
  const Matrix F = feature_matrix(fs, measure.atoms());
  const auto& w = measure.weights();
  const std::size_t n = F.rows();
  std::vector<double> mean(F.cols(), 0.0);
  for (std::size_t a = 0; a < n; ++a) simd::axpy(w[a], F.row(a), mean);
  Matrix G(n, F.cols());
  for (std::size_t a = 0; a < n; ++a) {
    const double r = std::sqrt(w[a]);
    for (std::size_t j = 0; j < F.cols(); ++j) G(a, j) = r * (F(a, j) - mean[j]);
  }
  PopOperator op;
  op.kind = PopOperator::Kind::aa_star;
  op.sym_matrix = SymMatrix::symmetrized(matmul_abt(G, G));
  op.spectrum = sym_eig(op.sym_matrix);
  return op;
}

double tail_energy(const Spectrum& spec, std::size_t ell) {
  const std::size_t r = spec.numerical_rank();
  if (ell > spec.size()) fail(ErrorKind::index, "tail_energy: ell exceeds spectrum length");
  double s = 0.0;
  for (std::size_t i = ell; i < r; ++i) s += spec.eigenvalues[i] * spec.eigenvalues[i];
  return s;
}

ProjectionLike proj_pop(const PopOperator& op, std::size_t ell) {
  return ProjectionLike{spectral_projector(op.spectrum, ell), true};
}

ProjectionLike proj_hat(const KpcaModel& model, const Kernel& k, const DiscreteMeasure& measure,
                        std::size_t ell) {
  if (ell > model.rank()) {
    fail(ErrorKind::rank, "proj_hat: ell=" + std::to_string(ell) + " exceeds model rank " +
                              std::to_string(model.rank()));
  }
  const std::size_t N = measure.size();
  if (ell == 0) return ProjectionLike{SymMatrix::zeros(N), false};
  const Matrix values = eigenfunction_matrix(model, k, ell, measure.atoms());  // N x ell
  std::vector<std::vector<double>> us(ell);
  std::vector<double> inv(ell);
  for (std::size_t i = 0; i < ell; ++i) {
    us[i] = to_sym_coords(values.col(i), measure.weights());
    inv[i] = 1.0 / model.eigvals[i];
  }
  return ProjectionLike{sum_of_outer(us, inv, N), false};
}

ProjectionLike proj_hat_rf(const RfKpcaModel& model, const DiscreteMeasure& measure,
                           std::size_t ell) {
  if (ell > model.rank()) {
    fail(ErrorKind::rank, "proj_hat_rf: ell=" + std::to_string(ell) + " exceeds model rank " +
                              std::to_string(model.rank()));
  }
  const std::size_t N = measure.size();
  if (ell == 0) return ProjectionLike{SymMatrix::zeros(N), false};
  const Matrix F = feature_matrix(model.features, measure.atoms());  // N x d
  Matrix V(ell, F.cols());
  for (std::size_t i = 0; i < ell; ++i)
    for (std::size_t j = 0; j < F.cols(); ++j) V(i, j) = model.spectrum.eigenvectors(j, i);
  const Matrix proj = matmul_abt(F, V);  // N x ell, F phi_hat_{m,i}
  std::vector<std::vector<double>> bs(ell);
  std::vector<double> inv(ell);
  for (std::size_t i = 0; i < ell; ++i) {
    bs[i] = to_sym_coords(proj.col(i), measure.weights());
    inv[i] = 1.0 / model.spectrum.eigenvalues[i];
  }
  return ProjectionLike{sum_of_outer(bs, inv, N), false};
}

double recon_error(ReconVariant, const PopOperator& s_j, const ProjectionLike& q) {
  check_dims(s_j.sym_matrix.dim(), q.sym_matrix.dim(), "recon_error");
  // (I - Q) S = S - Q S
  Matrix r = s_j.sym_matrix.matrix();
  r -= matmul(q.sym_matrix.matrix(), s_j.sym_matrix.matrix());
  const double f = frobenius_norm(r);
  return f * f;
}

double proj_distance(const ProjectionLike& p, const ProjectionLike& q) {
  check_dims(p.sym_matrix.dim(), q.sym_matrix.dim(), "proj_distance");
  return matrix_norm(p.sym_matrix - q.sym_matrix, NormKind::operator_norm);
}

std::vector<std::size_t> draw_indices(const std::vector<double>& weights, std::size_t n,
                                      std::uint64_t seed) {
  if (n == 0) fail(ErrorKind::input, "draw_samples needs n >= 1");
  validate_probability_vector(weights, true);
  Rng rng = make_rng(seed, "draw_samples");
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<std::size_t> out(n);
  for (auto& v : out) v = pick(rng);
  return out;
}

Points draw_samples(const DiscreteMeasure& measure, std::size_t n, std::uint64_t seed) {
  const std::vector<std::size_t> idx = draw_indices(measure.weights(), n, seed);
  return measure.atoms().subset(idx);
}

nlohmann::json oracle_snapshot(const Kernel& k, const DiscreteMeasure& measure,
                               const PopOperator& s_j) {
  nlohmann::json j;
  j["schema"] = "rfkpca.oracle_snapshot/1";
  j["measure"] = {{"atoms", measure.size()}, {"weights", measure.weights()}};
  if (k.variant() == Kernel::Variant::finite_rank) {
    j["kernel"] = {{"variant", "finite_rank"},
                   {"lambdas", k.lambdas()},
                   {"kappa", k.kappa()},
                   {"rank", k.lambdas().size()}};
  } else {
    j["kernel"] = {{"variant", "gaussian"}, {"bandwidth", k.bandwidth()}, {"kappa", k.kappa()}};
  }
  const std::size_t r = s_j.spectrum.numerical_rank();
  std::vector<double> ev(s_j.spectrum.eigenvalues.begin(), s_j.spectrum.eigenvalues.begin() + r);
  j["population_spectrum"] = ev;
  j["hs_norm"] = frobenius_norm(s_j.sym_matrix.matrix());
  j["trace"] = s_j.sym_matrix.trace();
  return j;
}

}  // namespace rfkpca
