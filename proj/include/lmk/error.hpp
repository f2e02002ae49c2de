// Copyright 2026 The lmk Authors
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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lmk {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (non-finite point, bad bounds, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The operation is undefined on empty input (no valid points, zero mask sum).
class EmptyInput : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. `offset()` is the byte offset where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), message_(what), offset_(offset) {}

  [[nodiscard]] std::uint64_t offset() const noexcept { return offset_; }

  /// Same error with `context` (e.g. a file name) prepended to the message.
  [[nodiscard]] FormatError with_context(const std::string& context) const {
    return FormatError(context + ": " + message_, offset_);
  }

 private:
  std::string message_;
  std::uint64_t offset_;
};

/// Inconsistent training or tool configuration, detected before any work starts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace lmk
