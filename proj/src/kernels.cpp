#include "rfkpca/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rfkpca/error.hpp"
#include "rfkpca/rng.hpp"
#include "rfkpca/simd.hpp"

namespace rfkpca {

Kernel Kernel::gaussian(double bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    fail(ErrorKind::input, "gaussian bandwidth must be positive");
  }
  Kernel k;
  k.variant_ = Variant::gaussian;
  k.bandwidth_ = bandwidth;
  k.kappa_ = 1.0;
  return k;
}

Kernel Kernel::finite_rank(FunctionTable basis, std::vector<double> lambdas) {
  if (lambdas.empty()) fail(ErrorKind::input, "finite-rank kernel needs at least one eigenvalue");
  if (basis.rank() != lambdas.size()) {
    fail(ErrorKind::dimension, "basis rows must match the number of eigenvalues");
  }
  if (basis.weights.size() != basis.atom_count()) {
    fail(ErrorKind::dimension, "basis weights must match the atom count");
  }
  for (std::size_t t = 0; t < lambdas.size(); ++t) {
    if (!(lambdas[t] > 0.0) || !std::isfinite(lambdas[t])) {
      fail(ErrorKind::input, "finite-rank eigenvalues must be positive");
    }
    if (t > 0 && !(lambdas[t] < lambdas[t - 1])) {
      fail(ErrorKind::input, "finite-rank eigenvalues must be strictly descending");
    }
  }
  Kernel k;
  k.variant_ = Variant::finite_rank;
  double kappa = 0.0;
  for (std::size_t j = 0; j < basis.atom_count(); ++j) {
    double kjj = 0.0;
    for (std::size_t t = 0; t < lambdas.size(); ++t) {
      kjj += lambdas[t] * basis.values(t, j) * basis.values(t, j);
    }
    kappa = std::max(kappa, kjj);
  }
  k.kappa_ = kappa;
  k.basis_ = std::make_shared<const FunctionTable>(std::move(basis));
  k.lambdas_ = std::move(lambdas);
  return k;
}

const FunctionTable& Kernel::basis() const {
  if (!basis_) fail(ErrorKind::type, "kernel has no function table");
  return *basis_;
}

double Kernel::operator()(PointRef x, PointRef y) const {
  if (variant_ == Variant::gaussian) {
    if (x.is_atom() || y.is_atom()) fail(ErrorKind::domain, "gaussian kernel needs vector points");
    if (x.coords.size() != y.coords.size()) fail(ErrorKind::dimension, "point dimensions differ");
    return std::exp(-simd::sq_dist(x.coords, y.coords) / (2.0 * bandwidth_ * bandwidth_));
  }
  const std::size_t n = basis_->atom_count();
  if (!x.is_atom() || !y.is_atom() || x.atom >= n || y.atom >= n) {
    fail(ErrorKind::domain, "finite-rank kernel evaluated off the support");
  }
  double s = 0.0;
  for (std::size_t t = 0; t < lambdas_.size(); ++t) {
    s += lambdas_[t] * basis_->values(t, x.atom) * basis_->values(t, y.atom);
  }
  return s;
}

double kernel_eval(const Kernel& k, PointRef x, PointRef y) { return k(x, y); }

namespace {

// Rows of the scaled basis sqrt(lambda_t) psi_t restricted to the given atoms,
// laid out one point per row so that Gram entries become dot products.
Matrix finite_rank_features(const Kernel& k, const Points& p) {
  const FunctionTable& b = k.basis();
  const std::size_t T = b.rank();
  Matrix out(p.size(), T);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const PointRef x = p[i];
    if (!x.is_atom() || x.atom >= b.atom_count()) {
      fail(ErrorKind::domain, "finite-rank kernel evaluated off the support");
    }
    for (std::size_t t = 0; t < T; ++t) out(i, t) = std::sqrt(k.lambdas()[t]) * b.values(t, x.atom);
  }
  return out;
}

}  // namespace

Matrix cross_gram(const Kernel& k, const Points& a, const Points& b) {
  if (k.variant() == Kernel::Variant::finite_rank) {
    return matmul_abt(finite_rank_features(k, a), finite_rank_features(k, b));
  }
  Matrix out(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out(i, j) = k(a[i], b[j]);
  return out;
}

SymMatrix gram(const Kernel& k, const Points& points) {
  if (points.size() == 0) fail(ErrorKind::input, "gram needs at least one point");
  const std::size_t n = points.size();
  Matrix K(n, n);
  if (k.variant() == Kernel::Variant::finite_rank) {
    const Matrix f = finite_rank_features(k, points);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        const double v = simd::dot(f.row(i), f.row(j));
        K(i, j) = v;
        K(j, i) = v;
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        const double v = k(points[i], points[j]);
        K(i, j) = v;
        K(j, i) = v;
      }
    }
  }
  return SymMatrix(std::move(K));
}

SymMatrix center_gram(const SymMatrix& K, std::span<const double> weights) {
  const std::size_t n = K.dim();
  if (weights.size() != n) fail(ErrorKind::dimension, "center_gram weight length");
  validate_probability_vector(weights, true);
  const std::vector<double> kw = matvec(K.matrix(), weights);
  const double wkw = simd::dot(weights, kw);
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = K(i, j) - kw[i] - kw[j] + wkw;
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return SymMatrix(std::move(out));
}

Kernel make_finite_rank_kernel(const DiscreteMeasure& measure, const std::vector<double>& lambdas,
                               std::uint64_t seed) {
  const std::size_t N = measure.size();
  const std::size_t T = lambdas.size();
  if (measure.atoms().kind() != Points::Kind::atoms) {
    fail(ErrorKind::type, "finite-rank kernels live on abstract atoms");
  }
  if (T == 0 || T + 1 > N) {
    fail(ErrorKind::capacity, "rank " + std::to_string(T) + " needs at least " +
                                  std::to_string(T + 1) + " atoms, have " + std::to_string(N));
  }
  const auto& w = measure.weights();
  auto inner = [&](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < N; ++j) s += w[j] * a[j] * b[j];
    return s;
  };

  Matrix table(T, N);
  const std::vector<double> ones(N, 1.0);
  Rng rng = make_rng(seed, "finite_rank_basis");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(N);
  for (std::size_t t = 0; t < T; ++t) {
    int attempts = 0;
    while (true) {
      for (double& x : v) x = normal(rng);
      // Two passes of classical Gram-Schmidt against constants and earlier rows.
      for (int pass = 0; pass < 2; ++pass) {
        const double c = inner(v, ones);
        for (double& x : v) x -= c;
        for (std::size_t s = 0; s < t; ++s) {
          const double p = inner(v, table.row(s));
          simd::axpy(-p, table.row(s), v);
        }
      }
      const double norm = std::sqrt(inner(v, v));
      if (norm >= 1e-10) {
        for (std::size_t j = 0; j < N; ++j) table(t, j) = v[j] / norm;
        break;
      }
      if (++attempts > 100) {
        fail(ErrorKind::numeric, "Gram-Schmidt broke down for basis row " + std::to_string(t) +
                                     " after 100 retries");
      }
    }
  }
  return Kernel::finite_rank(FunctionTable{w, std::move(table)}, lambdas);
}

std::vector<double> poly_spectrum(double alpha, std::size_t count) {
  std::vector<double> l(count);
  for (std::size_t i = 0; i < count; ++i) l[i] = std::pow(static_cast<double>(i + 1), -alpha);
  return l;
}

std::vector<double> expo_spectrum(double gamma, std::size_t count) {
  std::vector<double> l(count);
  for (std::size_t i = 0; i < count; ++i) l[i] = std::exp(-gamma * static_cast<double>(i + 1));
  return l;
}

}  // namespace rfkpca
