#include "cdfield/error.hpp"

namespace cdfield {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Argument: return "argument error";
    case ErrorKind::Parameter: return "parameter error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::OracleTooLarge: return "oracle too large";
    case ErrorKind::TreewidthTooLarge: return "treewidth too large";
    case ErrorKind::DegenerateConditional: return "degenerate conditional";
    case ErrorKind::Convergence: return "convergence error";
    case ErrorKind::UnsupportedFamily: return "unsupported family";
    case ErrorKind::Precondition: return "precondition error";
    case ErrorKind::Io: return "i/o error";
  }
  return "unknown error";
}

}  // namespace cdfield
