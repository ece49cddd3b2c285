#include "rfkpca/error.hpp"

namespace rfkpca {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::input: return "input";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::not_psd: return "not_psd";
    case ErrorKind::rank: return "rank";
    case ErrorKind::eigengap: return "eigengap";
    case ErrorKind::domain: return "domain";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::index: return "index";
    case ErrorKind::size: return "size";
    case ErrorKind::type: return "type";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::out_of_regime: return "out_of_regime";
    case ErrorKind::log_domain: return "log_domain";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, std::string(to_string(kind)) + " error: " + what);
}

}  // namespace rfkpca
