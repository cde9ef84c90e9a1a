#pragma once

#include <stdexcept>
#include <string>

namespace olm {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad magic, unsupported version, malformed text.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Payload shorter than its declared lengths.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

// Data violates a type invariant (negative or non-finite activation, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Requested clustering cannot be satisfied by the available points.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace olm
