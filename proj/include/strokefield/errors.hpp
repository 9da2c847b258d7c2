// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace strokefield {

/// Base for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wrong number of parameters for a shape kind.
class ParameterShapeError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the operation's domain (non-positive scale, t outside [0,1], ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared during gradient evaluation or an optimizer step.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Dataset, image or checkpoint IO failures.
class IoError : public Error {
 public:
  using Error::Error;
};

class MissingFileError : public IoError {
 public:
  using IoError::IoError;
};

class MalformedMatrixError : public IoError {
 public:
  using IoError::IoError;
};

class ResolutionMismatchError : public IoError {
 public:
  using IoError::IoError;
};

class VersionMismatchError : public IoError {
 public:
  using IoError::IoError;
};

class TruncatedFileError : public IoError {
 public:
  using IoError::IoError;
};

class UnknownKindError : public IoError {
 public:
  using IoError::IoError;
};

/// Invalid configuration value or key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace strokefield
