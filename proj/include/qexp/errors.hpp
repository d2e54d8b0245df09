#ifndef QEXP_ERRORS_HPP
#define QEXP_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qexp {

// Base of everything this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameter values (non-finite, non-positive theta/sigma, ...).
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

// q <= 1: the bounded-support branch is not supported.
class UnsupportedBranch : public InvalidParameter {
 public:
  using InvalidParameter::InvalidParameter;
};

// Argument outside the domain of a function (x < 0 for survival, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Problems with the data: invalid values, degenerate or too-small samples,
// values below the censoring threshold, unparseable input lines.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what, std::vector<std::size_t> lines = {})
      : Error(what), lines_(std::move(lines)) {}

  /// 1-based input line numbers the error refers to (empty if not from a file).
  const std::vector<std::size_t>& lines() const noexcept { return lines_; }

 private:
  std::vector<std::size_t> lines_;
};

// An iterative solver failed to produce a certified answer.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// A matrix that must be inverted is singular or not positive definite.
class IllConditioned : public Error {
 public:
  using Error::Error;
};

class InsufficientReplicates : public Error {
 public:
  using Error::Error;
};

class MissingGroup : public Error {
 public:
  using Error::Error;
};

}  // namespace qexp

#endif  // QEXP_ERRORS_HPP
