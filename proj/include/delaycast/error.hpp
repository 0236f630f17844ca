#pragma once

#include <stdexcept>
#include <string>

namespace delaycast {

// Base for every error raised by the toolkit. The CLI maps the concrete
// subclasses onto stable exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input layout problems: missing CSV column, unknown schema field.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class EmptyTableError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Matrix / vector dimensions that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Object used in the wrong lifecycle state (e.g. a stale forward cache).
class StateError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite value.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// I/O or malformed persisted artifact.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace delaycast
