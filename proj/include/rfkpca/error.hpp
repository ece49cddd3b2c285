#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rfkpca {

enum class ErrorKind {
  input,          // malformed argument (non-finite entries, bad weights, n < 2, ...)
  numeric,        // iteration failed to converge
  not_psd,
  rank,           // requested more directions than the numerical rank
  eigengap,       // cut placed inside a degenerate cluster
  domain,         // point outside the kernel's domain
  capacity,       // prescribed rank does not fit the support
  precondition,   // theorem hypothesis violated
  degenerate,     // fitted model has no retained direction
  index,
  size,
  type,           // wrong kernel/feature variant
  dimension,
  out_of_regime,  // no rate branch applies
  log_domain,
  config,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` lets callers map failures
/// to exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace rfkpca
