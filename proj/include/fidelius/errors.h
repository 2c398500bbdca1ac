// Copyright 2026 The Fidelius Authors.
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

#ifndef FIDELIUS_ERRORS_H_
#define FIDELIUS_ERRORS_H_

#include <stdexcept>
#include <string>

namespace fidelius {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data: question sets, run files, mock specs.
// line() is 1-based, or 0 when the error is not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

  // Same error with "<context>: " prepended; the line number is kept.
  ParseError WithContext(const std::string& context) const {
    return ParseError(context + ": " + what(), line_, Raw{});
  }

 private:
  struct Raw {};
  ParseError(const std::string& what, int line, Raw) : Error(what), line_(line) {}

  int line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  enum class Kind {
    kTransport,   // retryable; already retried attempts() times
    kTerminal,    // auth, 4xx, malformed response, unknown item
    kCapability,  // the backend cannot serve the request at all
  };

  BackendError(Kind kind, const std::string& what, int attempts = 1)
      : Error(what), kind_(kind), attempts_(attempts) {}

  Kind kind() const { return kind_; }
  int attempts() const { return attempts_; }
  bool retryable() const { return kind_ == Kind::kTransport; }

 private:
  Kind kind_;
  int attempts_;
};

}  // namespace fidelius

#endif  // FIDELIUS_ERRORS_H_
