/*
 * Copyright 2026 The murm Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace murm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Caller passed an argument outside an operation's domain.
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// Input data violates an invariant the pipeline relies on.
class DataError : public Error {
public:
  using Error::Error;
};

/// A text row could not be parsed.
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string &what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Binary file has the wrong magic or version.
class FormatError : public Error {
public:
  using Error::Error;
};

/// Binary file is truncated or internally inconsistent.
class CorruptionError : public Error {
public:
  using Error::Error;
};

/// A numerical routine could not reach the requested accuracy.
class NumericalError : public Error {
public:
  using Error::Error;
};

} // namespace murm
