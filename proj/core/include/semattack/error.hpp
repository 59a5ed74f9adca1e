#pragma once

#include <stdexcept>
#include <string>

namespace semattack {

// All library failures derive from Error so callers (the CLI in particular)
// can map them onto a single exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class UnsupportedTransform : public Error {
 public:
  using Error::Error;
};

// Raised when a bound is requested outside the hypothesis it was proven under.
class PreconditionFailed : public Error {
 public:
  PreconditionFailed(const std::string& what, double lhs, double rhs)
      : Error(what), lhs_(lhs), rhs_(rhs) {}

  double lhs() const noexcept { return lhs_; }
  double rhs() const noexcept { return rhs_; }

 private:
  double lhs_;
  double rhs_;
};

}  // namespace semattack
