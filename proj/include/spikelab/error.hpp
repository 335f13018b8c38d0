#pragma once

#include <stdexcept>
#include <string>

namespace spikelab {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad dimensions, out-of-range parameters, malformed input.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Argument lies where the function is undefined: on a bulk atom, inside a
/// spectral support, at a singular resolvent.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver failed to converge or produced a non-finite value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A data-driven estimator has nothing to work with (e.g. empty filtered set).
class EstimationError : public Error {
 public:
  using Error::Error;
};

}  // namespace spikelab
