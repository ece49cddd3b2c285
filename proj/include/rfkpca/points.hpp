#pragma once

// Sample points and finite-support probability measures.
//
// A point is either a real vector (Gaussian kernel, random Fourier features)
// or an opaque atom index into a DiscreteMeasure (finite-rank kernels).

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "rfkpca/linalg.hpp"

namespace rfkpca {

struct PointRef {
  static constexpr std::size_t kNoAtom = std::numeric_limits<std::size_t>::max();

  std::span<const double> coords;  // empty for atom points
  std::size_t atom = kNoAtom;

  bool is_atom() const noexcept { return atom != kNoAtom; }

  static PointRef of_atom(std::size_t a) noexcept { return PointRef{{}, a}; }
  static PointRef of_coords(std::span<const double> x) noexcept { return PointRef{x, kNoAtom}; }
};

class Points {
 public:
  enum class Kind { vectors, atoms };

  Points() = default;
  static Points vectors(Matrix coords);
  static Points atoms(std::vector<std::size_t> indices);

  Kind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept {
    return kind_ == Kind::vectors ? coords_.rows() : atoms_.size();
  }
  std::size_t point_dim() const noexcept { return kind_ == Kind::vectors ? coords_.cols() : 0; }
  PointRef operator[](std::size_t i) const noexcept;

  const Matrix& coords() const noexcept { return coords_; }
  const std::vector<std::size_t>& atom_indices() const noexcept { return atoms_; }

  Points subset(std::span<const std::size_t> rows) const;

 private:
  Kind kind_ = Kind::atoms;
  Matrix coords_;
  std::vector<std::size_t> atoms_;
};

/// Distinct points of a sample with their multiplicities, first-occurrence
/// order. `compress(x).points[compress(x).index_of[i]] == x[i]`.
struct CompressedPoints {
  Points points;
  std::vector<std::size_t> counts;
  std::vector<std::size_t> index_of;
};

CompressedPoints compress(const Points& sample);

/// Probability measure on N distinct atoms with strictly positive weights.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  DiscreteMeasure(Points atoms, std::vector<double> weights);

  /// N abstract atoms 0..N-1 with uniform weights.
  static DiscreteMeasure uniform(std::size_t n_atoms);
  /// Abstract atoms 0..N-1 with the given weights.
  static DiscreteMeasure on_indices(std::vector<double> weights);

  std::size_t size() const noexcept { return weights_.size(); }
  const Points& atoms() const noexcept { return atoms_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  Points atoms_;
  std::vector<double> weights_;
};

void validate_probability_vector(std::span<const double> w, bool allow_zero);

}  // namespace rfkpca
