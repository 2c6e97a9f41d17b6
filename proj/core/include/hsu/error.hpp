#pragma once

#include <stdexcept>
#include <string>

namespace hsu {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A documented precondition on a scalar argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input is geometrically degenerate (all-zero column, rank-deficient subspace).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// A non-finite value appeared in a solver factor.
class DivergenceError : public Error {
 public:
  DivergenceError(std::string factor, int iteration)
      : Error("divergence: non-finite entry in " + factor + " at iteration " +
              std::to_string(iteration)),
        factor_(std::move(factor)),
        iteration_(iteration) {}

  const std::string& factor() const noexcept { return factor_; }
  int iteration() const noexcept { return iteration_; }

 private:
  std::string factor_;
  int iteration_;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class UnsupportedFormat : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace hsu
