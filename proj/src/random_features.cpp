#include "rfkpca/random_features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "rfkpca/error.hpp"
#include "rfkpca/rng.hpp"
#include "rfkpca/simd.hpp"

namespace rfkpca {

FeatureSample sample_rff(double bandwidth, std::size_t point_dim, std::size_t m,
                         std::uint64_t seed, const RffOptions& options) {
  if (m == 0) fail(ErrorKind::input, "random Fourier features need m >= 1");
  if (!(bandwidth > 0.0)) fail(ErrorKind::input, "bandwidth must be positive");
  FeatureSample fs;
  fs.variant_ = FeatureSample::Variant::rff;
  fs.m_ = m;
  fs.seed_ = seed;
  fs.kappa_m_ = 1.0;
  if (options.forced_omegas) {
    if (options.forced_omegas->rows() != m || options.forced_omegas->cols() != point_dim) {
      fail(ErrorKind::dimension, "forced frequencies must be m x point_dim");
    }
    fs.omegas_ = *options.forced_omegas;
    return fs;
  }
  fs.omegas_ = Matrix(m, point_dim);
  Rng rng = make_rng(seed, "rff_omega");
  std::normal_distribution<double> normal(0.0, 1.0 / bandwidth);
  for (double& v : fs.omegas_.data()) v = normal(rng);
  return fs;
}

FeatureSample sample_finite_rank(const Kernel& k, std::size_t m, std::uint64_t seed,
                                 const FiniteRankOptions& options) {
  if (k.variant() != Kernel::Variant::finite_rank) {
    fail(ErrorKind::type, "sample_finite_rank needs a finite-rank kernel");
  }
  const auto& lambdas = k.lambdas();
  const std::size_t T = lambdas.size();
  const double total = std::accumulate(lambdas.begin(), lambdas.end(), 0.0);

  FeatureSample fs;
  fs.variant_ = FeatureSample::Variant::finite_rank_draws;
  fs.seed_ = seed;
  fs.basis_ = std::make_shared<const FunctionTable>(k.basis());
  fs.probs_.resize(T);
  for (std::size_t t = 0; t < T; ++t) fs.probs_[t] = lambdas[t] / total;

  if (options.deterministic) {
    fs.m_ = T;
    fs.indices_.resize(T);
    std::iota(fs.indices_.begin(), fs.indices_.end(), 0);
    fs.coefs_.resize(T);
    for (std::size_t t = 0; t < T; ++t) fs.coefs_[t] = std::sqrt(lambdas[t]);
  } else {
    if (m == 0) fail(ErrorKind::input, "finite-rank features need m >= 1");
    fs.m_ = m;
    Rng rng = make_rng(seed, "finite_rank_draws");
    std::discrete_distribution<std::size_t> pick(fs.probs_.begin(), fs.probs_.end());
    fs.indices_.resize(m);
    for (auto& t : fs.indices_) t = pick(rng);
    fs.coefs_.assign(m, std::sqrt(total / static_cast<double>(m)));
  }

  // |phi(x, t)|^2 = (sum lambda) psi_t(x)^2 bounds |Phi(x)|^2 in both modes.
  const FunctionTable& b = *fs.basis_;
  double psi_max = 0.0;
  for (double v : b.values.data()) psi_max = std::max(psi_max, v * v);
  fs.kappa_m_ = total * psi_max;
  return fs;
}

FeatureSample sample_finite_rank_signs(const Kernel& k, std::size_t m, std::uint64_t seed) {
  if (k.variant() != Kernel::Variant::finite_rank) {
    fail(ErrorKind::type, "sign features need a finite-rank kernel");
  }
  if (m == 0) fail(ErrorKind::input, "finite-rank features need m >= 1");
  const auto& lambdas = k.lambdas();
  const std::size_t T = lambdas.size();
  FeatureSample fs;
  fs.variant_ = FeatureSample::Variant::finite_rank_signs;
  fs.m_ = m;
  fs.seed_ = seed;
  fs.basis_ = std::make_shared<const FunctionTable>(k.basis());
  fs.mixing_ = Matrix(m, T);
  Rng rng = make_rng(seed, "finite_rank_signs");
  std::bernoulli_distribution coin(0.5);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t t = 0; t < T; ++t)
      fs.mixing_(i, t) = (coin(rng) ? scale : -scale) * std::sqrt(lambdas[t]);

  // sup_x |phi(x, s)|^2 <= max_x (sum_t sqrt(lambda_t) |psi_t(x)|)^2
  const FunctionTable& b = *fs.basis_;
  double kappa = 0.0;
  for (std::size_t j = 0; j < b.atom_count(); ++j) {
    double s = 0.0;
    for (std::size_t t = 0; t < T; ++t) s += std::sqrt(lambdas[t]) * std::abs(b.values(t, j));
    kappa = std::max(kappa, s * s);
  }
  fs.kappa_m_ = kappa;
  return fs;
}

void FeatureSample::eval(PointRef x, std::span<double> out) const {
  if (out.size() != d()) fail(ErrorKind::dimension, "feature output length");
  if (variant_ == Variant::rff) {
    if (x.is_atom()) fail(ErrorKind::domain, "random Fourier features need vector points");
    if (x.coords.size() != omegas_.cols()) fail(ErrorKind::dimension, "point dimension");
    const double scale = 1.0 / std::sqrt(static_cast<double>(m_));
    for (std::size_t i = 0; i < m_; ++i) {
      const double a = simd::dot(x.coords, omegas_.row(i));
      out[i] = scale * std::cos(a);
      out[m_ + i] = scale * std::sin(a);
    }
    return;
  }
  if (!x.is_atom() || x.atom >= basis_->atom_count()) {
    fail(ErrorKind::domain, "finite-rank features evaluated off the support");
  }
  if (variant_ == Variant::finite_rank_signs) {
    const std::size_t T = basis_->rank();
    std::vector<double> psi(T);
    for (std::size_t t = 0; t < T; ++t) psi[t] = basis_->values(t, x.atom);
    for (std::size_t i = 0; i < m_; ++i) out[i] = simd::dot(mixing_.row(i), psi);
    return;
  }
  for (std::size_t i = 0; i < m_; ++i) out[i] = coefs_[i] * basis_->values(indices_[i], x.atom);
}

std::vector<double> FeatureSample::eval(PointRef x) const {
  std::vector<double> out(d());
  eval(x, out);
  return out;
}

Matrix feature_matrix(const FeatureSample& fs, const Points& points) {
  Matrix f(points.size(), fs.d());
  for (std::size_t i = 0; i < points.size(); ++i) fs.eval(points[i], f.row(i));
  return f;
}

double approx_kernel(const FeatureSample& fs, PointRef x, PointRef y) {
  const std::vector<double> a = fs.eval(x);
  const std::vector<double> b = fs.eval(y);
  return simd::dot(a, b);
}

double rff_cosine_form(const FeatureSample& fs, PointRef x, PointRef y) {
  if (fs.variant() != FeatureSample::Variant::rff) {
    fail(ErrorKind::type, "cosine form applies to random Fourier features");
  }
  if (x.is_atom() || y.is_atom()) fail(ErrorKind::domain, "vector points required");
  std::vector<double> diff(x.coords.size());
  for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = x.coords[j] - y.coords[j];
  double s = 0.0;
  for (std::size_t i = 0; i < fs.m(); ++i) s += std::cos(simd::dot(diff, fs.omegas().row(i)));
  return s / static_cast<double>(fs.m());
}

}  // namespace rfkpca
