#pragma once

#include <stdexcept>
#include <string>

namespace flatflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments or incompatible grids.
class DomainError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Raised by the numerical solvers; the CLI maps every subclass to exit code 4.
class SolverError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public SolverError {
 public:
  ConvergenceError(const std::string& what, double gap, int iterations)
      : SolverError(what), gap_(gap), iterations_(iterations) {}
  double gap() const { return gap_; }
  int iterations() const { return iterations_; }

 private:
  double gap_;
  int iterations_;
};

/// The evolving set reached the safety margin of the computational box.
class ContainmentError : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace flatflow
