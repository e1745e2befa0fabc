// Copyright 2026 The mbcl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MBCL_ERRORS_H_
#define MBCL_ERRORS_H_

#include <stdexcept>
#include <string>

namespace mbcl {

// Root of every exception thrown by the library. The CLI maps the concrete
// subclasses onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor extents that do not fit the requested operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced or consumed, or a value outside an operation's domain.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Out-of-range item/user/behavior index.
class IndexError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what) {}
  size_t line() const { return line_; }

 private:
  size_t line_ = 0;
};

// Input that parses but violates the declared schema (e.g. unknown behavior).
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Data that cannot support the requested operation (empty log, too few
// negatives, no evaluable users, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Bad configuration key or value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A verification harness (gradient check, invariant scan) failed.
class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace mbcl

#endif  // MBCL_ERRORS_H_
