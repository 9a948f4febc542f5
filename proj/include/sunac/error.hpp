// Copyright 2026 The sunac-cpp Authors
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

namespace sunac {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied value is outside the accepted domain (stride 0, N = 0 prompts, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Shapes or sizes of two inputs disagree.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A forward pass produced a NaN or infinity.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, int layer_index)
      : Error(what + " (layer " + std::to_string(layer_index) + ")"), layer_index_(layer_index) {}

  int layer_index() const noexcept { return layer_index_; }

 private:
  int layer_index_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Bad magic, version, truncated payload or out-of-range code in a serialized file.
class CorruptStream : public Error {
 public:
  using Error::Error;
};

/// SI-SDR reference is identically zero.
class InvalidReference : public Error {
 public:
  using Error::Error;
};

/// An architecture description is internally inconsistent.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// Input audio is not readable as the expected WAV layout.
class AudioFormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace sunac
