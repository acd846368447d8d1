#pragma once

#include <stdexcept>
#include <string>

namespace wristhap {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Coincident points, zero-length strings or a non-bijective string map.
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

/// A config value that cannot be read as the expected type.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Non-zero torque requested from a moment matrix with no usable column.
class RankDeficient : public Error {
 public:
  using Error::Error;
};

class ContactOutsideShield : public Error {
 public:
  using Error::Error;
};

/// An event scheduled before the queue's current time.
class PastEvent : public Error {
 public:
  using Error::Error;
};

/// Scenario rejected before the first tick.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Trace CSV header does not match the fixed column layout.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace wristhap
