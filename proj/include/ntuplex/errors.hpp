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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ntuplex {

// Error categories map 1:1 onto CLI exit codes (see cli.hpp).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Filesystem / OS failures. Exit code 1.
class IoError : public Error {
public:
  using Error::Error;
};

/// Bad user input: arguments, expressions, schema misuse. Exit code 2.
class UserError : public Error {
public:
  using Error::Error;
};

/// Expression syntax error; `offset` is the byte position in the input text.
class ParseError : public UserError {
public:
  ParseError(const std::string& msg, size_t offset)
      : UserError(msg), offset_(offset) {}
  size_t offset() const { return offset_; }

private:
  size_t offset_;
};

/// On-disk data is damaged: bad magic, CRC mismatch, truncation. Exit code 3.
class CorruptionError : public Error {
public:
  using Error::Error;
};

/// Wire protocol or connection failures. Exit code 4.
class RemoteError : public Error {
public:
  using Error::Error;
};

}  // namespace ntuplex
