#pragma once

#include <stdexcept>
#include <string>

namespace latentprobe {

/// Input violates a documented invariant or precondition (CLI exit code 1).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument lies outside the domain of a meteorological relation.
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Filesystem failure: missing, unreadable or unwritable file (CLI exit code 2).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace latentprobe
