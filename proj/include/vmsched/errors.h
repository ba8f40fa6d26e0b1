// Copyright 2026 The vmsched Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
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

namespace vmsched {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A request that violates its own invariants (e.g. odd Double-mode demand).
class InvalidRequest : public Error {
 public:
  using Error::Error;
};

class InvalidAction : public Error {
 public:
  using Error::Error;
};

/// An allocation would drive some NUMA resource negative.
class InfeasibleAllocation : public Error {
 public:
  using Error::Error;
};

/// A release names a VM that is not live; the trace is malformed.
class UnknownVm : public Error {
 public:
  using Error::Error;
};

class NoFeasibleAction : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string &what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class OrderingError : public Error {
 public:
  using Error::Error;
};

class WarmStartUnreachable : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MissingCheckpoint : public Error {
 public:
  using Error::Error;
};

class UnknownAblation : public Error {
 public:
  using Error::Error;
};

}  // namespace vmsched
