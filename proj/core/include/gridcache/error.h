// Copyright 2026 The gridcache Authors.
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

#ifndef GRIDCACHE_ERROR_H_
#define GRIDCACHE_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gridcache {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed textual input. Line and column are 1-based; column 0 means the
// whole line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : Error("line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Input that parses but violates a domain rule (e.g. object out of bounds).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// File header names a different format version.
class VersionError : public Error {
 public:
  using Error::Error;
};

// An action that is not part of the current stage's action set. Distinct
// from an in-game failure, which is reported through StepResult::success.
class IllegalActionError : public Error {
 public:
  using Error::Error;
};

// Operation called in the wrong game phase or with inconsistent arguments.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace gridcache

#endif  // GRIDCACHE_ERROR_H_
