#include <cstdlib>
#include <cstring>

#include "rfkpca/simd.hpp"

namespace rfkpca::simd {
namespace {

bool cpu_has_avx2_fma() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select() noexcept {
  const char* forced = std::getenv("RFKPCA_ISA");
  if (forced != nullptr && std::strcmp(forced, "scalar") == 0) {
    return detail::scalar_table();
  }
  return kernels(Isa::avx2);
}

}  // namespace

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return detail::avx2_table() != nullptr && cpu_has_avx2_fma();
  }
  return false;
}

const KernelTable& kernels(Isa isa) noexcept {
  if (isa == Isa::avx2 && isa_available(Isa::avx2)) return *detail::avx2_table();
  return detail::scalar_table();
}

const KernelTable& active() noexcept {
  static const KernelTable& table = select();
  return table;
}

std::string_view isa_name(Isa isa) noexcept {
  return isa == Isa::avx2 ? "avx2" : "scalar";
}

}  // namespace rfkpca::simd
