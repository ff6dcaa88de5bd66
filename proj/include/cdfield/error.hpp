#pragma once

#include <stdexcept>
#include <string>

namespace cdfield {

enum class ErrorKind {
  Argument,
  Parameter,
  Domain,
  Validation,
  OracleTooLarge,
  TreewidthTooLarge,
  DegenerateConditional,
  Convergence,
  UnsupportedFamily,
  Precondition,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a kind so the C boundary can map
// it onto a status code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cdfield
