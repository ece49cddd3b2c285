#pragma once

// Data-parallel inner loops used by the dense linear algebra and the feature
// maps. Every kernel has a scalar reference implementation and, where the CPU
// supports it, an AVX2+FMA variant. The variant is chosen once at startup;
// setting RFKPCA_ISA=scalar in the environment forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace rfkpca::simd {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x[i] *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
  // Plane rotation: x' = c x + s y,  y' = c y - s x
  void (*rot)(double* x, double* y, double c, double s, std::size_t n);
  // sum_i (a[i] - b[i])^2
  double (*sq_dist)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i] + beta * z[i]  (symmetric rank-2 row update)
  void (*axpy2)(double alpha, const double* x, double beta, const double* z,
                double* y, std::size_t n);
};

bool isa_available(Isa isa) noexcept;

/// Kernel table for an explicitly requested instruction set. Requesting an
/// unavailable ISA returns the scalar table.
const KernelTable& kernels(Isa isa) noexcept;

/// Kernel table selected at runtime for this process.
const KernelTable& active() noexcept;

std::string_view isa_name(Isa isa) noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void scale(double alpha, std::span<double> x) {
  active().scale(alpha, x.data(), x.size());
}

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  return active().sq_dist(a.data(), b.data(), a.size());
}

namespace detail {
// Implemented in scalar.cpp / avx2.cpp; exposed for the dispatcher and for
// the equivalence tests.
const KernelTable& scalar_table() noexcept;
const KernelTable* avx2_table() noexcept;  // nullptr when not compiled in
}  // namespace detail

}  // namespace rfkpca::simd
