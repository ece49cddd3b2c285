#include "rfkpca/kpca.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rfkpca/error.hpp"
#include "rfkpca/simd.hpp"

namespace rfkpca {
namespace {

std::vector<double> uniform_weights(std::size_t n) {
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) s += w[i];
  w.back() = 1.0 - s;
  return w;
}

std::vector<double> count_weights(const std::vector<std::size_t>& counts, std::size_t n) {
  std::vector<double> w(counts.size());
  for (std::size_t a = 0; a < counts.size(); ++a) {
    w[a] = static_cast<double>(counts[a]) / static_cast<double>(n);
  }
  return w;
}

// Number of leading eigenvalues kept: above the relative rank tolerance and
// at most `cap`.
std::size_t retained(const std::vector<double>& ev, std::size_t cap) {
  if (ev.empty() || ev.front() <= 0.0) return 0;
  const double cut = Spectrum::kRankTolerance * ev.front();
  std::size_t r = 0;
  while (r < ev.size() && r < cap && ev[r] > cut) ++r;
  return r;
}

// sqrt(w_i) M_ij sqrt(w_j), filled symmetrically.
SymMatrix weight_sandwich(const SymMatrix& M, const std::vector<double>& w) {
  const std::size_t n = M.dim();
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ri = std::sqrt(w[i]);
    for (std::size_t j = i; j < n; ++j) {
      const double v = ri * M(i, j) * std::sqrt(w[j]);
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return SymMatrix(std::move(s));
}

// Rows Phi(x_a) - mu_hat scaled by sqrt(w_a).
Matrix scaled_centered_features(const Matrix& F, const std::vector<double>& w,
                                std::vector<double>& mean) {
  const std::size_t k = F.rows();
  const std::size_t d = F.cols();
  mean.assign(d, 0.0);
  for (std::size_t a = 0; a < k; ++a) simd::axpy(w[a], F.row(a), mean);
  Matrix G(k, d);
  for (std::size_t a = 0; a < k; ++a) {
    const double r = std::sqrt(w[a]);
    for (std::size_t j = 0; j < d; ++j) G(a, j) = r * (F(a, j) - mean[j]);
  }
  return G;
}

}  // namespace

std::vector<double> KpcaModel::expansion(std::size_t i) const {
  if (i >= rank()) fail(ErrorKind::index, "eigenfunction index " + std::to_string(i) +
                                              " out of range for rank " + std::to_string(rank()));
  const double s = 1.0 / std::sqrt(static_cast<double>(sample_count) * eigvals[i]);
  std::vector<double> c = dual_coeffs[i];
  for (double& v : c) v *= s;
  return c;
}

KpcaModel fit_weighted(SymMatrix K, std::vector<double> weights, std::size_t sample_count) {
  const std::size_t p = K.dim();
  if (sample_count < 2) fail(ErrorKind::input, "kernel PCA needs n >= 2 samples");
  if (weights.size() != p) fail(ErrorKind::dimension, "one weight per train point");

  const SymMatrix S = weight_sandwich(center_gram(K, weights), weights);
  const Spectrum spec = sym_eig(S);

  double scale = 0.0;
  for (std::size_t i = 0; i < p; ++i) scale = std::max(scale, std::abs(K(i, i)));
  if (spec.eigenvalues.empty() || !(spec.eigenvalues.front() > 1e-10 * scale)) {
    fail(ErrorKind::degenerate, "centered Gram matrix has no direction above tolerance");
  }
  const std::size_t r = retained(spec.eigenvalues, std::min(sample_count, p) - 1);

  KpcaModel model;
  model.sample_count = sample_count;
  model.eigvals.assign(spec.eigenvalues.begin(), spec.eigenvalues.begin() + r);
  model.dual_coeffs.resize(r);
  const double root_n = std::sqrt(static_cast<double>(sample_count));
  for (std::size_t i = 0; i < r; ++i) {
    // gamma = sqrt(n) (I - w 1^T) W^{1/2} u
    std::vector<double> g(p);
    for (std::size_t a = 0; a < p; ++a) g[a] = std::sqrt(weights[a]) * spec.eigenvectors(a, i);
    double total = 0.0;
    for (double v : g) total += v;
    for (std::size_t a = 0; a < p; ++a) g[a] = root_n * (g[a] - weights[a] * total);
    model.dual_coeffs[i] = std::move(g);
  }
  model.gram = std::move(K);
  model.train_weights = std::move(weights);
  return model;
}

KpcaModel fit_exact(const Kernel& k, const Points& samples) {
  if (samples.size() < 2) fail(ErrorKind::input, "kernel PCA needs n >= 2 samples");
  KpcaModel model = fit_weighted(gram(k, samples), uniform_weights(samples.size()), samples.size());
  model.train_points = samples;
  return model;
}

KpcaModel fit_exact_gram(const SymMatrix& K) {
  if (K.dim() < 2) fail(ErrorKind::input, "kernel PCA needs n >= 2 samples");
  return fit_weighted(K, uniform_weights(K.dim()), K.dim());
}

KpcaModel fit_exact_compressed(const Kernel& k, const Points& samples) {
  if (samples.size() < 2) fail(ErrorKind::input, "kernel PCA needs n >= 2 samples");
  CompressedPoints c = compress(samples);
  KpcaModel model =
      fit_weighted(gram(k, c.points), count_weights(c.counts, samples.size()), samples.size());
  model.train_points = std::move(c.points);
  return model;
}

Matrix eigenfunction_matrix(const KpcaModel& model, const Kernel& k, std::size_t count,
                            const Points& points) {
  if (count > model.rank()) {
    fail(ErrorKind::rank, "requested " + std::to_string(count) + " eigenfunctions, rank is " +
                              std::to_string(model.rank()));
  }
  if (model.train_points.size() != model.gram.dim()) {
    fail(ErrorKind::input, "model was fitted from a bare Gram matrix and has no train points");
  }
  const Matrix kx = cross_gram(k, points, model.train_points);  // points x train
  Matrix coef(count, model.train_points.size());
  for (std::size_t i = 0; i < count; ++i) {
    const std::vector<double> c = model.expansion(i);
    std::copy(c.begin(), c.end(), coef.row(i).begin());
  }
  return matmul_abt(kx, coef);
}

std::vector<double> eigenfunction_eval(const KpcaModel& model, const Kernel& k, std::size_t i,
                                       const Points& points) {
  if (i >= model.rank()) {
    fail(ErrorKind::index, "eigenfunction index " + std::to_string(i) + " out of range for rank " +
                               std::to_string(model.rank()));
  }
  return eigenfunction_matrix(model, k, i + 1, points).col(i);
}

std::vector<double> embed_exact(const KpcaModel& model, const Kernel& k, PointRef x,
                                std::size_t ell) {
  if (ell > model.rank()) {
    fail(ErrorKind::rank, "embedding dimension " + std::to_string(ell) + " exceeds rank " +
                              std::to_string(model.rank()));
  }
  if (ell == 0) return {};
  std::vector<double> row(model.train_points.size());
  for (std::size_t j = 0; j < row.size(); ++j) row[j] = k(x, model.train_points[j]);
  std::vector<double> out(ell);
  for (std::size_t i = 0; i < ell; ++i) out[i] = simd::dot(row, model.expansion(i));
  return out;
}

RfKpcaModel fit_rf(const FeatureSample& fs, const Points& samples, RfRoute route) {
  const std::size_t n = samples.size();
  if (n < 2) fail(ErrorKind::input, "random-feature kernel PCA needs n >= 2 samples");
  CompressedPoints c = compress(samples);
  const std::vector<double> w = count_weights(c.counts, n);
  const Matrix F = feature_matrix(fs, c.points);
  const std::size_t k = F.rows();
  const std::size_t d = F.cols();

  RfKpcaModel model{fs, SymMatrix{}, Spectrum{}, {}, n};
  const Matrix G = scaled_centered_features(F, w, model.emp_mean);  // k x d
  const Matrix Gt = G.transpose();
  model.emp_cov = SymMatrix::symmetrized(matmul_abt(Gt, Gt));

  if (route == RfRoute::automatic) route = k < d ? RfRoute::dual : RfRoute::primal;
  const std::size_t cap = std::min(d, k - (k > 0 ? 1 : 0));

  Spectrum kept;
  if (route == RfRoute::primal) {
    const Spectrum full = sym_eig(model.emp_cov);
    const std::size_t r = retained(full.eigenvalues, cap);
    kept.eigenvalues.assign(full.eigenvalues.begin(), full.eigenvalues.begin() + r);
    kept.eigenvectors = Matrix(d, r);
    for (std::size_t row = 0; row < d; ++row)
      for (std::size_t col = 0; col < r; ++col) kept.eigenvectors(row, col) = full.eigenvectors(row, col);
  } else {
    // Sigma_hat = G^T G shares its nonzero spectrum with G G^T; an eigenpair
    // (mu, u) of the latter maps to G^T u / sqrt(mu).
    const Spectrum dual = sym_eig(SymMatrix::symmetrized(matmul_abt(G, G)));
    const std::size_t r = retained(dual.eigenvalues, cap);
    kept.eigenvalues.assign(dual.eigenvalues.begin(), dual.eigenvalues.begin() + r);
    kept.eigenvectors = Matrix(d, r);
    for (std::size_t col = 0; col < r; ++col) {
      const double s = 1.0 / std::sqrt(dual.eigenvalues[col]);
      for (std::size_t a = 0; a < k; ++a) {
        const double ua = s * dual.eigenvectors(a, col);
        for (std::size_t row = 0; row < d; ++row) kept.eigenvectors(row, col) += ua * G(a, row);
      }
    }
    canonicalize(kept);
  }
  model.spectrum = std::move(kept);
  return model;
}

std::vector<double> embed_rf(const RfKpcaModel& model, PointRef x, std::size_t ell,
                             bool centered) {
  if (ell > model.rank()) {
    fail(ErrorKind::rank, "embedding dimension " + std::to_string(ell) + " exceeds rank " +
                              std::to_string(model.rank()));
  }
  std::vector<double> phi = model.features.eval(x);
  if (centered) simd::axpy(-1.0, model.emp_mean, phi);
  std::vector<double> out(ell);
  const Matrix& V = model.spectrum.eigenvectors;
  for (std::size_t i = 0; i < ell; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < phi.size(); ++j) s += phi[j] * V(j, i);
    out[i] = s;
  }
  return out;
}

SymMatrix pop_rf_cov(const FeatureSample& fs, const DiscreteMeasure& measure) {
  const Matrix F = feature_matrix(fs, measure.atoms());
  std::vector<double> mean;
  const Matrix Gt = scaled_centered_features(F, measure.weights(), mean).transpose();
  return SymMatrix::symmetrized(matmul_abt(Gt, Gt));
}

}  // namespace rfkpca
