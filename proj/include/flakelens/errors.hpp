#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flakelens {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `offset` is a byte offset (XML) or a 1-based line
/// number (line-oriented formats), see `location_kind`.
class ParseError : public Error {
 public:
  enum class Location { ByteOffset, Line };

  ParseError(const std::string& what, std::size_t location, Location kind)
      : Error(what), location_(location), kind_(kind) {}

  std::size_t location() const noexcept { return location_; }
  Location location_kind() const noexcept { return kind_; }

 private:
  std::size_t location_;
  Location kind_;
};

/// Well-formed input whose values violate a domain constraint.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A history too short for the requested feature.
class InsufficientHistoryError : public Error {
 public:
  using Error::Error;
};

/// Caller broke an operation's precondition.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Training data cannot produce a meaningful model (one class, no splits).
class DegenerateModelError : public Error {
 public:
  using Error::Error;
};

/// Model lacks information needed by an operation (e.g. node cover).
class ModelMetadataError : public Error {
 public:
  using Error::Error;
};

/// Feature vector/matrix does not line up with a model or schema.
class SchemaMismatchError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

/// External tool or filesystem failure.
class EnvironmentError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace flakelens
