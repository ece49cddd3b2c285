#pragma once

// Dense real linear algebra: a row-major matrix, a validated symmetric matrix,
// and the symmetric eigendecomposition everything else is built on.

#include <cstddef>
#include <span>
#include <vector>

namespace rfkpca {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::vector<double> col(std::size_t c) const;

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  Matrix transpose() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);

/// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
/// a * b^T; rows of both operands are contiguous, so this is the fast product.
Matrix matmul_abt(const Matrix& a, const Matrix& b);
/// a * x
std::vector<double> matvec(const Matrix& a, std::span<const double> x);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);

/// Symmetric matrix with finite entries. Construction validates symmetry to
/// 1e-12 absolute; `symmetrized` averages with the transpose instead, for
/// results that are symmetric in exact arithmetic.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Matrix m);

  static SymMatrix symmetrized(const Matrix& m);
  static SymMatrix zeros(std::size_t n);
  static SymMatrix identity(std::size_t n);
  static SymMatrix diagonal(std::span<const double> diag);

  std::size_t dim() const noexcept { return m_.rows(); }
  double operator()(std::size_t r, std::size_t c) const noexcept { return m_(r, c); }
  const Matrix& matrix() const noexcept { return m_; }
  double trace() const noexcept;

 private:
  Matrix m_;
};

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b);
SymMatrix operator-(const SymMatrix& a, const SymMatrix& b);
SymMatrix operator*(double s, const SymMatrix& a);

/// Eigenvalues in descending order with matching orthonormal eigenvector
/// columns. A spectrum may be truncated (fewer columns than the ambient
/// dimension) when only the nonzero part of an operator is represented.
struct Spectrum {
  std::vector<double> eigenvalues;
  Matrix eigenvectors;  // dim x count, column i pairs with eigenvalues[i]

  std::size_t size() const noexcept { return eigenvalues.size(); }
  std::size_t dim() const noexcept { return eigenvectors.rows(); }
  std::vector<double> vector(std::size_t i) const { return eigenvectors.col(i); }

  /// V diag(lambda) V^T
  SymMatrix reconstruct() const;
  /// Number of eigenvalues above `rel_tol` times the largest one.
  std::size_t numerical_rank(double rel_tol = kRankTolerance) const;

  static constexpr double kRankTolerance = 1e-10;
};

/// Full eigendecomposition by Householder tridiagonalization and implicit QL.
/// Each eigenvector is sign-normalized so its largest-magnitude component is
/// positive (ties: lowest index).
Spectrum sym_eig(const SymMatrix& a);

enum class NormKind { operator_norm, hilbert_schmidt, trace };

double matrix_norm(const SymMatrix& a, NormKind kind);

/// V diag(lambda^t) V^T for positive semidefinite `a`. Eigenvalues in
/// [-1e-10 ||a||_op, 0) are clamped to zero; anything lower is an error.
SymMatrix fractional_power(const SymMatrix& a, double t);

/// Orthogonal projector onto the top-`ell` eigenvectors.
SymMatrix spectral_projector(const Spectrum& s, std::size_t ell);

/// Half-gaps (lambda_i - lambda_{i+1}) / 2.
std::vector<double> eigengaps(const Spectrum& s);

/// Reorders eigenpairs descending and applies the sign convention. Used by
/// `sym_eig` and by routes that assemble a spectrum from a dual problem.
void canonicalize(Spectrum& s);

}  // namespace rfkpca
