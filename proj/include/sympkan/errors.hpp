#pragma once

#include <stdexcept>
#include <string>

namespace sympkan {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A computation produced a non-finite value, or an optimizer step had to be
// rejected because of one.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// An API was called out of order or with arguments that make no sense
// (empty batch, backward before forward, parameter index out of range, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Input vector length does not match what the model was built for.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Operation not defined for this model kind (e.g. asking a plain derivative
// net for a Hamiltonian).
class ModelKindError : public Error {
 public:
  using Error::Error;
};

// Malformed file content. The message names the byte offset where parsing
// stopped making sense.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Spline degree too low for the requested operation.
class DegreeError : public Error {
 public:
  using Error::Error;
};

// Two point masses closer than the cutoff; the potential is not usable there.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// The ODE integrator could not continue. Carries the last time it had a
// valid state for.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double last_good_time)
      : Error(what), last_good_time_(last_good_time) {}
  double last_good_time() const { return last_good_time_; }

 private:
  double last_good_time_ = 0.0;
};

// Every rollout of a batch diverged; there is no finite statistic to report.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Filesystem-level failure (cannot open/read/write).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sympkan
