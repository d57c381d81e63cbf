#pragma once

#include <stdexcept>
#include <string>

namespace cartanlab {

/// Base of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value left the domain where the fields are smooth (non-finite result,
/// p crossing the zero section, outside the tube, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Matrix inversion refused: singular or condition estimate above the bound.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

/// The fundamental tensor is not positive definite, or a structure violates
/// its regularity requirement.
class RegularityError : public Error {
 public:
  using Error::Error;
};

/// Index valence of a d-tensor does not match what the operation expects.
class ValenceError : public Error {
 public:
  using Error::Error;
};

/// Expression text could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Manifest document violates the schema.
class ManifestError : public Error {
 public:
  using Error::Error;
};

}  // namespace cartanlab
