// Copyright (c) 2026 The ctxaug Authors. All rights reserved.
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

#pragma once

#include <stdexcept>
#include <string>

namespace ctxaug {

/// Base of every error raised by the library. The CLI maps subclasses to
/// exit codes: IoError -> 2, everything else -> 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text; carries the 1-based line of the failure (0 if unknown).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(what + (line > 0 ? " (line " + std::to_string(line) + ")" : std::string{})),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Well-formed input missing a required field.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

}  // namespace ctxaug
