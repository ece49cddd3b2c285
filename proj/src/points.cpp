#include "rfkpca/points.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "rfkpca/error.hpp"

namespace rfkpca {

Points Points::vectors(Matrix coords) {
  for (double v : coords.data()) {
    if (!std::isfinite(v)) fail(ErrorKind::input, "non-finite point coordinate");
  }
  Points p;
  p.kind_ = Kind::vectors;
  p.coords_ = std::move(coords);
  return p;
}

Points Points::atoms(std::vector<std::size_t> indices) {
  Points p;
  p.kind_ = Kind::atoms;
  p.atoms_ = std::move(indices);
  return p;
}

PointRef Points::operator[](std::size_t i) const noexcept {
  if (kind_ == Kind::vectors) return PointRef::of_coords(coords_.row(i));
  return PointRef::of_atom(atoms_[i]);
}

Points Points::subset(std::span<const std::size_t> rows) const {
  if (kind_ == Kind::atoms) {
    std::vector<std::size_t> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(atoms_.at(r));
    return atoms(std::move(out));
  }
  Matrix m(rows.size(), coords_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = coords_.row(rows[i]);
    std::copy(src.begin(), src.end(), m.row(i).begin());
  }
  return vectors(std::move(m));
}

CompressedPoints compress(const Points& sample) {
  CompressedPoints out;
  out.index_of.resize(sample.size());
  std::vector<std::size_t> firsts;
  if (sample.kind() == Points::Kind::atoms) {
    std::map<std::size_t, std::size_t> seen;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      const std::size_t a = sample.atom_indices()[i];
      auto [it, inserted] = seen.try_emplace(a, firsts.size());
      if (inserted) {
        firsts.push_back(i);
        out.counts.push_back(0);
      }
      ++out.counts[it->second];
      out.index_of[i] = it->second;
    }
  } else {
    std::map<std::vector<double>, std::size_t> seen;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      const auto row = sample.coords().row(i);
      auto [it, inserted] = seen.try_emplace(std::vector<double>(row.begin(), row.end()),
                                             firsts.size());
      if (inserted) {
        firsts.push_back(i);
        out.counts.push_back(0);
      }
      ++out.counts[it->second];
      out.index_of[i] = it->second;
    }
  }
  out.points = sample.subset(firsts);
  return out;
}

void validate_probability_vector(std::span<const double> w, bool allow_zero) {
  if (w.empty()) fail(ErrorKind::input, "empty weight vector");
  double sum = 0.0;
  for (double v : w) {
    if (!std::isfinite(v) || v < 0.0 || (!allow_zero && v == 0.0)) {
      fail(ErrorKind::input, allow_zero ? "weights must be nonnegative"
                                        : "weights must be strictly positive");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    fail(ErrorKind::input, "weights sum to " + std::to_string(sum) + ", expected 1");
  }
}

DiscreteMeasure::DiscreteMeasure(Points atoms, std::vector<double> weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (atoms_.size() != weights_.size()) {
    fail(ErrorKind::dimension, "measure needs one weight per atom");
  }
  validate_probability_vector(weights_, false);
  if (compress(atoms_).points.size() != atoms_.size()) {
    fail(ErrorKind::input, "measure atoms must be distinct");
  }
}

DiscreteMeasure DiscreteMeasure::uniform(std::size_t n_atoms) {
  if (n_atoms == 0) fail(ErrorKind::input, "measure needs at least one atom");
  std::vector<double> w(n_atoms, 1.0 / static_cast<double>(n_atoms));
  // 1/N summed N times can miss 1 by a few ulps; absorb into the last atom.
  const double s = std::accumulate(w.begin(), w.end() - 1, 0.0);
  w.back() = 1.0 - s;
  return on_indices(std::move(w));
}

DiscreteMeasure DiscreteMeasure::on_indices(std::vector<double> weights) {
  std::vector<std::size_t> idx(weights.size());
  std::iota(idx.begin(), idx.end(), 0);
  return DiscreteMeasure(Points::atoms(std::move(idx)), std::move(weights));
}

}  // namespace rfkpca
