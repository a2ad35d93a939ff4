// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <stdexcept>
#include <string>

namespace sonotex {

// Base of every error raised by the library. Callers that only care about
// "something failed" catch this; the CLI maps the subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: out-of-range parameters, inconsistent shapes, infeasible
// requests. CLI exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Filesystem or OS failure. CLI exit code 1.
class IoError : public Error {
 public:
  using Error::Error;
};

// A file exists and is readable but its content is not what we expect
// (bad magic, wrong version, truncation, inconsistent shape).
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace sonotex
