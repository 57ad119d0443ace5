#pragma once

#include <stdexcept>
#include <string>

namespace nfmem {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument is outside the domain of the operation (bad input, not a numerical failure).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed: no root, unstable step, refinement mismatch.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Non-convergent or ill-posed fit.
class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace nfmem
