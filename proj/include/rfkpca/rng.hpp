#pragma once

// Seed derivation for independent random streams.
//
// Every stream is a std::mt19937_64 seeded with
//   derive_seed(master, label, c0, c1, ...)
// which folds the FNV-1a hash of `label` and each coordinate into the master
// seed through splitmix64. Streams for different labels or coordinates are
// therefore independent of scheduling order and thread count.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace rfkpca {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a(std::string_view s) noexcept;

std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::initializer_list<std::uint64_t> coords = {}) noexcept;

inline Rng make_rng(std::uint64_t master, std::string_view label,
                    std::initializer_list<std::uint64_t> coords = {}) {
  return Rng(derive_seed(master, label, coords));
}

}  // namespace rfkpca
