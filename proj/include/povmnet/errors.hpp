#pragma once

#include <stdexcept>
#include <string>

namespace povmnet {

/// Input violates a documented size limit (e.g. too many sites for dense storage).
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Operand shapes do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine produced a non-finite or out-of-range quantity.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Time integration drifted beyond tolerance or could not be scheduled.
class IntegrationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Sampler could not be initialised.
class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed, truncated or inconsistent files on disk.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace povmnet
