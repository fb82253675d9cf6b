#pragma once

#include <stdexcept>
#include <string>

namespace lprop {

/// Base class for all library errors. Subclasses map onto the CLI exit
/// codes: config errors (2), precondition/hypothesis failures (3) and
/// numerical failures (4).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed expression or config text. Carries the byte offset of the
/// first offending character.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& msg)
      : Error(msg + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Hypothesis (H2) failed: sampled infimum of a11 over the domain is not
/// strictly positive.
class H2Violation : public Error {
 public:
  using Error::Error;
};

/// Input outside the admissible domain of an operation (points outside
/// Omega, invalid geometry parameters, division by zero, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Grid too coarse for the requested domain.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// Requested target cell is not marked reachable.
class NotReachable : public Error {
 public:
  using Error::Error;
};

/// Point outside the grid bounding box.
class OutOfBox : public Error {
 public:
  using Error::Error;
};

/// discretize() requires a diagonal coefficient matrix.
class NonDiagonalError : public Error {
 public:
  using Error::Error;
};

/// Guard against regressions producing negative off-diagonal weights.
class MonotonicityError : public Error {
 public:
  using Error::Error;
};

/// A node where every second-order and first-order coefficient vanishes,
/// or a node cut off from the boundary.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

/// Relaxation failed to reach the requested tolerance.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& msg, double residual)
      : Error(msg), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_ = 0.0;
};

/// Bad experiment config file or unknown key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace lprop
