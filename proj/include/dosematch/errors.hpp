#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dosematch {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required column or field is missing from an input file.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A cell or token could not be parsed (carries row/column in the message).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input parsed fine but violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An iterative estimator failed to reach its stopping criterion.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, int iterations, double gradient_norm,
                   std::vector<double> last_iterate = {})
      : Error(what),
        iterations_(iterations),
        gradient_norm_(gradient_norm),
        last_iterate_(std::move(last_iterate)) {}

  int iterations() const { return iterations_; }
  double gradient_norm() const { return gradient_norm_; }
  const std::vector<double>& last_iterate() const { return last_iterate_; }

 private:
  int iterations_;
  double gradient_norm_;
  std::vector<double> last_iterate_;
};

}  // namespace dosematch
