#include "rfkpca/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rfkpca/error.hpp"
#include "rfkpca/simd.hpp"

namespace rfkpca {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    fail(ErrorKind::dimension, "matrix data length does not match shape");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.front().size();
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    if (rows[i].size() != c) fail(ErrorKind::dimension, "ragged row list");
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

std::vector<double> Matrix::col(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) fail(ErrorKind::dimension, "matrix sum");
  simd::active().axpy(1.0, other.data_.data(), data_.data(), data_.size());
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) fail(ErrorKind::dimension, "matrix difference");
  simd::active().axpy(-1.0, other.data_.data(), data_.data(), data_.size());
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  simd::active().scale(s, data_.data(), data_.size());
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix matmul_abt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) fail(ErrorKind::dimension, "matmul_abt inner dimensions");
  const auto& k = simd::active();
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      out(i, j) = k.dot(ai, b.row(j).data(), a.cols());
    }
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) fail(ErrorKind::dimension, "matmul inner dimensions");
  const auto& k = simd::active();
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* oi = out.row(i).data();
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double aip = a(i, p);
      if (aip != 0.0) k.axpy(aip, b.row(p).data(), oi, b.cols());
    }
  }
  return out;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) fail(ErrorKind::dimension, "matvec");
  std::vector<double> out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = simd::dot(a.row(i), x);
  return out;
}

double frobenius_norm(const Matrix& a) {
  return std::sqrt(simd::active().dot(a.data().data(), a.data().data(), a.data().size()));
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

// ---------------------------------------------------------------------------

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) fail(ErrorKind::dimension, "symmetric matrix must be square");
  const std::size_t n = m_.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = m_(i, j);
      if (!std::isfinite(v)) fail(ErrorKind::input, "non-finite matrix entry");
      if (j > i && std::abs(v - m_(j, i)) > 1e-12) {
        fail(ErrorKind::input, "matrix is not symmetric at (" + std::to_string(i) + "," +
                                   std::to_string(j) + ")");
      }
    }
  }
}

SymMatrix SymMatrix::symmetrized(const Matrix& m) {
  if (m.rows() != m.cols()) fail(ErrorKind::dimension, "symmetrized: matrix must be square");
  const std::size_t n = m.rows();
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    s(i, i) = m(i, i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return SymMatrix(std::move(s));
}

SymMatrix SymMatrix::zeros(std::size_t n) { return SymMatrix(Matrix(n, n)); }
SymMatrix SymMatrix::identity(std::size_t n) { return SymMatrix(Matrix::identity(n)); }

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return SymMatrix(std::move(m));
}

double SymMatrix::trace() const noexcept {
  double t = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) t += m_(i, i);
  return t;
}

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
  return SymMatrix(a.matrix() + b.matrix());
}
SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
  return SymMatrix(a.matrix() - b.matrix());
}
SymMatrix operator*(double s, const SymMatrix& a) { return SymMatrix(s * a.matrix()); }

// ---------------------------------------------------------------------------

SymMatrix Spectrum::reconstruct() const {
  const std::size_t n = dim();
  Matrix scaled = eigenvectors;  // columns scaled by lambda
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < size(); ++c) scaled(r, c) *= eigenvalues[c];
  return SymMatrix::symmetrized(matmul_abt(scaled, eigenvectors));
}

std::size_t Spectrum::numerical_rank(double rel_tol) const {
  if (eigenvalues.empty() || eigenvalues.front() <= 0.0) return 0;
  const double cut = rel_tol * eigenvalues.front();
  return static_cast<std::size_t>(std::count_if(eigenvalues.begin(), eigenvalues.end(),
                                                [cut](double v) { return v > cut; }));
}

void canonicalize(Spectrum& s) {
  const std::size_t n = s.dim();
  const std::size_t count = s.size();
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return s.eigenvalues[a] > s.eigenvalues[b];
  });
  Spectrum out;
  out.eigenvalues.resize(count);
  out.eigenvectors = Matrix(n, count);
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t src = order[c];
    out.eigenvalues[c] = s.eigenvalues[src];
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double a = std::abs(s.eigenvectors(r, src));
      // Strict comparison with a relative margin keeps the lowest index on
      // ties that differ only by rounding.
      if (a > best * (1.0 + 1e-12) + 1e-300) {
        best = a;
        arg = r;
      }
    }
    const double sign = s.eigenvectors(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, c) = sign * s.eigenvectors(r, src);
  }
  s = std::move(out);
}

namespace {

// Householder reduction to tridiagonal form followed by implicit QL. The
// working eigenvector matrix is column-major so that every inner loop walks
// contiguous memory and can use the vector kernels.
class TridiagonalQL {
 public:
  explicit TridiagonalQL(const SymMatrix& a)
      : n_(a.dim()), v_(n_ * n_), d_(n_), e_(n_), k_(simd::active()) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) at(i, j) = a(i, j);
  }

  Spectrum run() {
    if (n_ > 0) {
      tridiagonalize();
      ql();
    }
    Spectrum s;
    s.eigenvalues = d_;
    s.eigenvectors = Matrix(n_, n_);
    for (std::size_t c = 0; c < n_; ++c)
      for (std::size_t r = 0; r < n_; ++r) s.eigenvectors(r, c) = at(r, c);
    return s;
  }

 private:
  double& at(std::size_t r, std::size_t c) noexcept { return v_[c * n_ + r]; }
  double* colp(std::size_t c) noexcept { return v_.data() + c * n_; }

  void tridiagonalize() {
    const std::size_t n = n_;
    for (std::size_t j = 0; j < n; ++j) d_[j] = at(n - 1, j);

    for (std::size_t i = n - 1; i > 0; --i) {
      double scale = 0.0;
      double h = 0.0;
      for (std::size_t k = 0; k < i; ++k) scale += std::abs(d_[k]);
      if (scale == 0.0) {
        e_[i] = d_[i - 1];
        for (std::size_t j = 0; j < i; ++j) {
          d_[j] = at(i - 1, j);
          at(i, j) = 0.0;
          at(j, i) = 0.0;
        }
      } else {
        for (std::size_t k = 0; k < i; ++k) {
          d_[k] /= scale;
          h += d_[k] * d_[k];
        }
        double f = d_[i - 1];
        double g = std::sqrt(h);
        if (f > 0) g = -g;
        e_[i] = scale * g;
        h -= f * g;
        d_[i - 1] = f - g;
        for (std::size_t j = 0; j < i; ++j) e_[j] = 0.0;

        for (std::size_t j = 0; j < i; ++j) {
          f = d_[j];
          at(j, i) = f;
          g = e_[j] + at(j, j) * f;
          const std::size_t len = i - (j + 1);
          if (len > 0) {
            const double* vj = colp(j) + j + 1;
            g += k_.dot(vj, d_.data() + j + 1, len);
            k_.axpy(f, vj, e_.data() + j + 1, len);
          }
          e_[j] = g;
        }
        f = 0.0;
        for (std::size_t j = 0; j < i; ++j) {
          e_[j] /= h;
          f += e_[j] * d_[j];
        }
        const double hh = f / (h + h);
        k_.axpy(-hh, d_.data(), e_.data(), i);
        for (std::size_t j = 0; j < i; ++j) {
          f = d_[j];
          g = e_[j];
          k_.axpy2(-f, e_.data() + j, -g, d_.data() + j, colp(j) + j, i - j);
          d_[j] = at(i - 1, j);
          at(i, j) = 0.0;
        }
      }
      d_[i] = h;
    }

    for (std::size_t i = 0; i + 1 < n; ++i) {
      at(n - 1, i) = at(i, i);
      at(i, i) = 1.0;
      const double h = d_[i + 1];
      if (h != 0.0) {
        for (std::size_t k = 0; k <= i; ++k) d_[k] = at(k, i + 1) / h;
        for (std::size_t j = 0; j <= i; ++j) {
          const double g = k_.dot(colp(i + 1), colp(j), i + 1);
          k_.axpy(-g, d_.data(), colp(j), i + 1);
        }
      }
      for (std::size_t k = 0; k <= i; ++k) at(k, i + 1) = 0.0;
    }
    for (std::size_t j = 0; j < n; ++j) {
      d_[j] = at(n - 1, j);
      at(n - 1, j) = 0.0;
    }
    at(n - 1, n - 1) = 1.0;
    e_[0] = 0.0;
  }

  void ql() {
    const std::size_t n = n_;
    for (std::size_t i = 1; i < n; ++i) e_[i - 1] = e_[i];
    e_[n - 1] = 0.0;

    double f = 0.0;
    double tst1 = 0.0;
    const double eps = std::ldexp(1.0, -52);
    const int max_iter = 60;
    for (std::size_t l = 0; l < n; ++l) {
      tst1 = std::max(tst1, std::abs(d_[l]) + std::abs(e_[l]));
      std::size_t m = l;
      while (m < n) {
        if (std::abs(e_[m]) <= eps * tst1) break;
        ++m;
      }
      if (m == n) m = n - 1;  // e_[n-1] == 0, loop always terminates above

      if (m > l) {
        int iter = 0;
        do {
          if (++iter > max_iter) {
            fail(ErrorKind::numeric, "sym_eig: QL iteration did not converge for eigenvalue " +
                                         std::to_string(l) + " after " +
                                         std::to_string(max_iter) + " iterations");
          }
          double g = d_[l];
          double p = (d_[l + 1] - g) / (2.0 * e_[l]);
          double r = std::hypot(p, 1.0);
          if (p < 0) r = -r;
          d_[l] = e_[l] / (p + r);
          d_[l + 1] = e_[l] * (p + r);
          const double dl1 = d_[l + 1];
          double h = g - d_[l];
          for (std::size_t i = l + 2; i < n; ++i) d_[i] -= h;
          f += h;

          p = d_[m];
          double c = 1.0, c2 = 1.0, c3 = 1.0;
          const double el1 = e_[l + 1];
          double s = 0.0, s2 = 0.0;
          for (std::size_t ii = m; ii-- > l;) {
            c3 = c2;
            c2 = c;
            s2 = s;
            g = c * e_[ii];
            h = c * p;
            r = std::hypot(p, e_[ii]);
            e_[ii + 1] = s * r;
            s = e_[ii] / r;
            c = p / r;
            p = c * d_[ii] - s * g;
            d_[ii + 1] = h + s * (c * g + s * d_[ii]);
            k_.rot(colp(ii + 1), colp(ii), c, s, n);
          }
          p = -s * s2 * c3 * el1 * e_[l] / dl1;
          e_[l] = s * p;
          d_[l] = c * p;
        } while (std::abs(e_[l]) > eps * tst1);
      }
      d_[l] += f;
      e_[l] = 0.0;
    }
  }

  std::size_t n_;
  std::vector<double> v_;
  std::vector<double> d_;
  std::vector<double> e_;
  const simd::KernelTable& k_;
};

}  // namespace

Spectrum sym_eig(const SymMatrix& a) {
  Spectrum s = TridiagonalQL(a).run();
  canonicalize(s);
  return s;
}

double matrix_norm(const SymMatrix& a, NormKind kind) {
  if (kind == NormKind::hilbert_schmidt) {
    // Equal to sqrt(sum lambda_i^2) for symmetric input; computed directly.
    return frobenius_norm(a.matrix());
  }
  const Spectrum s = sym_eig(a);
  double out = 0.0;
  for (double v : s.eigenvalues) {
    if (kind == NormKind::operator_norm) {
      out = std::max(out, std::abs(v));
    } else {
      out += std::abs(v);
    }
  }
  return out;
}

SymMatrix fractional_power(const SymMatrix& a, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) fail(ErrorKind::input, "fractional power exponent must be >= 0");
  Spectrum s = sym_eig(a);
  double op = 0.0;
  for (double v : s.eigenvalues) op = std::max(op, std::abs(v));
  for (double& v : s.eigenvalues) {
    if (v < -1e-10 * op) {
      fail(ErrorKind::not_psd, "fractional_power: eigenvalue " + std::to_string(v) +
                                   " below -1e-10 * ||A||_op");
    }
    v = v <= 0.0 ? (t == 0.0 ? 1.0 : 0.0) : std::pow(v, t);
  }
  return s.reconstruct();
}

SymMatrix spectral_projector(const Spectrum& s, std::size_t ell) {
  const std::size_t rank = s.numerical_rank();
  if (ell > rank) {
    fail(ErrorKind::rank, "spectral_projector: ell=" + std::to_string(ell) +
                              " exceeds numerical rank " + std::to_string(rank));
  }
  if (ell == 0) return SymMatrix::zeros(s.dim());
  if (ell < s.size() && s.eigenvalues[ell - 1] - s.eigenvalues[ell] <= 1e-12) {
    fail(ErrorKind::eigengap, "spectral_projector: cut at ell=" + std::to_string(ell) +
                                  " splits a degenerate eigenvalue cluster");
  }
  Matrix top(s.dim(), ell);
  for (std::size_t r = 0; r < s.dim(); ++r)
    for (std::size_t c = 0; c < ell; ++c) top(r, c) = s.eigenvectors(r, c);
  return SymMatrix::symmetrized(matmul_abt(top, top));
}

std::vector<double> eigengaps(const Spectrum& s) {
  if (s.size() < 2) fail(ErrorKind::size, "eigengaps needs at least two eigenvalues");
  std::vector<double> gaps(s.size() - 1);
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    gaps[i] = 0.5 * (s.eigenvalues[i] - s.eigenvalues[i + 1]);
  }
  return gaps;
}

}  // namespace rfkpca
