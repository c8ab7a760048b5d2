#pragma once

#include <stdexcept>
#include <string>

namespace qsc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file: missing field, wrong JSON type, bad version.
class FormatError : public Error {
  public:
    using Error::Error;
};

/// Well-formed input whose content violates a physical or structural invariant.
class DataError : public Error {
  public:
    using Error::Error;
};

/// Tensor or vector sizes that disagree with each other.
class DimensionError : public DataError {
  public:
    using DataError::DataError;
};

/// A numerical invariant (norm, hermiticity, gradient agreement) was broken.
class IntegrityError : public Error {
  public:
    using Error::Error;
};

/// An iterative method did not reach its tolerance.
class ConvergenceError : public Error {
  public:
    ConvergenceError(const std::string &what, double residual)
        : Error(what + " (residual " + std::to_string(residual) + ")"),
          residual_(residual) {}

    [[nodiscard]] double residual() const noexcept { return residual_; }

  private:
    double residual_;
};

} // namespace qsc
