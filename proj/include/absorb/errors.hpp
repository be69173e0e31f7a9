#pragma once

#include <stdexcept>
#include <string>

namespace absorb {

enum class ErrorKind {
  InvalidArgument,
  EllipticityViolation,
  LinearSolveFailure,
  NoConvergence,
  CapExceeded,
  GammaZero,
  GammaNegative,
  NegativityViolation,
  ResidualTooLarge,
  NotADensity,
  ShapeMismatch,
  Io,
  Config,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so the CLI can map it
// onto a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace absorb
