#pragma once

#include <stdexcept>
#include <string>

namespace doublon {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid lattice, parameters or configuration file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Factorization or eigensolver failure, including residual certification.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A requested dimension exceeds a configured memory cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// The doublon bands of a reference run are not separated by a usable gap.
class NoGapError : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace doublon
