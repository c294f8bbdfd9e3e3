#pragma once

#include <stdexcept>
#include <string>

namespace rmtfolio {

/// Broad failure classes; the CLI maps each one onto a stable exit code.
enum class ErrorKind {
  parameter,  ///< invalid argument or configuration
  data,       ///< malformed or insufficient input data
  numerical,  ///< singular matrix, non-convergence, degenerate spectrum
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what)
      : Error(ErrorKind::parameter, what) {}
};

/// Input data could not be parsed or validated.
class IngestionError : public Error {
 public:
  explicit IngestionError(const std::string& what)
      : Error(ErrorKind::data, what) {}
};

/// Estimator needs more observations than were supplied (N <= m for Tyler).
class InsufficientSamplesError : public Error {
 public:
  InsufficientSamplesError(const std::string& what, long assets, long samples)
      : Error(ErrorKind::data, what), assets_(assets), samples_(samples) {}

  long assets() const noexcept { return assets_; }
  long samples() const noexcept { return samples_; }

 private:
  long assets_;
  long samples_;
};

/// An observation that cannot be used, e.g. an all-zero return vector.
class DegenerateObservationError : public Error {
 public:
  DegenerateObservationError(const std::string& what, long column)
      : Error(ErrorKind::data, what), column_(column) {}

  long column() const noexcept { return column_; }

 private:
  long column_;
};

class SingularMatrixError : public Error {
 public:
  explicit SingularMatrixError(const std::string& what)
      : Error(ErrorKind::numerical, what) {}
};

/// Covariance or spectrum that makes the requested quantity undefined.
class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& what)
      : Error(ErrorKind::numerical, what) {}
};

/// Iterative method stopped at its iteration cap; carries the last residual.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : Error(ErrorKind::numerical, what),
        residual_(residual),
        iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

}  // namespace rmtfolio
