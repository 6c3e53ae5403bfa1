#pragma once

#include <stdexcept>
#include <string>

namespace mimgan {

// Base of every exception thrown by the core. The C API maps each subclass
// onto one status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation (ln of a
// non-positive value, zero-norm vector, empty batch, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid or inconsistent configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite values produced during training or inversion.
class NumericError : public Error {
 public:
  using Error::Error;
};

// File-system or parse failure.
class IoError : public Error {
 public:
  using Error::Error;
};

// Checkpoint written by an incompatible format version.
class VersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace mimgan
