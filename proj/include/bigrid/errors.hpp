#pragma once

#include <stdexcept>
#include <string>

namespace bigrid {

/// Raised when a caller passes an argument outside an operation's domain.
class InvalidParameter : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by a factorization that meets a zero pivot.
class SingularMatrix : public std::runtime_error {
public:
  SingularMatrix(const std::string& what, long row)
      : std::runtime_error(what), row_(row) {}
  /// Row of the offending pivot, or -1 when the backend cannot tell.
  long row() const noexcept { return row_; }

private:
  long row_;
};

/// Non-finite values or a failed iterative solve.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace bigrid
