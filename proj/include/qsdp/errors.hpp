#pragma once

#include <stdexcept>
#include <string>

namespace qsdp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (dimensions, NaN, level set, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// An iterative method hit its iteration cap before meeting its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double primal_residual,
                   double dual_residual, long iterations)
      : Error(what),
        primal_residual_(primal_residual),
        dual_residual_(dual_residual),
        iterations_(iterations) {}

  double primal_residual() const { return primal_residual_; }
  double dual_residual() const { return dual_residual_; }
  long iterations() const { return iterations_; }

 private:
  double primal_residual_;
  double dual_residual_;
  long iterations_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Configuration document rejected; `path()` is the JSON pointer of the offending key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace qsdp
