#pragma once

#include <stdexcept>
#include <string>

namespace dhm {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Inconsistent lattice, spin-structure or solver parameters.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

// A documented precondition on an argument does not hold.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class RetractionFailure : public Error {
 public:
  RetractionFailure(const std::string& what, std::size_t site) : Error(what), site_(site) {}
  std::size_t site() const { return site_; }

 private:
  std::size_t site_;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

// The pair (phi, psi) is not a critical point to the requested tolerance.
class NotCritical : public Error {
 public:
  NotCritical(const std::string& what, double map_norm, double spinor_norm)
      : Error(what), map_norm_(map_norm), spinor_norm_(spinor_norm) {}
  double map_residual_norm() const { return map_norm_; }
  double spinor_residual_norm() const { return spinor_norm_; }

 private:
  double map_norm_;
  double spinor_norm_;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

}  // namespace dhm
