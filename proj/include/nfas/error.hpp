#pragma once

#include <stdexcept>
#include <string>

namespace nfas {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad shapes, out-of-range parameters, unknown labels.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A file that exists but is not a well-formed NFT1 tensor.
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Filesystem failures (missing, unreadable or unwritable paths).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Numerical degeneracy. Recoverable inside the library; escalated to a hard
/// failure only when the pipeline runs in strict mode.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

}  // namespace nfas
