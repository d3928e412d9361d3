// Copyright 2026 The PerturbKit Authors.
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

#ifndef PERTURBKIT_ERRORS_HPP_
#define PERTURBKIT_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace perturbkit {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DuplicateNameError : public Error {
 public:
  explicit DuplicateNameError(const std::string& name)
      : Error("duplicate record name: " + name) {}
};

class ShapeMismatchError : public Error {
 public:
  explicit ShapeMismatchError(const std::string& msg) : Error(msg) {}
};

class NonFiniteValueError : public Error {
 public:
  explicit NonFiniteValueError(const std::string& msg) : Error(msg) {}
};

class BadMagicError : public Error {
 public:
  BadMagicError() : Error("bad checkpoint magic") {}
};

class UnsupportedVersionError : public Error {
 public:
  explicit UnsupportedVersionError(unsigned v)
      : Error("unsupported checkpoint version " + std::to_string(v)) {}
};

class TruncatedFileError : public Error {
 public:
  explicit TruncatedFileError(const std::string& msg)
      : Error("truncated checkpoint: " + msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& expected)
      : Error("parse error at offset " + std::to_string(offset) +
              ": expected " + expected),
        offset(offset),
        expected(expected) {}

  std::size_t offset;
  std::string expected;
};

class UnknownPresetError : public Error {
 public:
  explicit UnknownPresetError(const std::string& name)
      : Error("unknown preset: " + name) {}
};

class NonFiniteResultError : public Error {
 public:
  explicit NonFiniteResultError(const std::string& tensor)
      : Error("non-finite value produced while perturbing tensor '" + tensor +
              "'") {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

class CycleError : public Error {
 public:
  explicit CycleError(const std::string& msg) : Error(msg) {}
};

class EmptyDatasetError : public Error {
 public:
  EmptyDatasetError() : Error("dataset size must be >= 1") {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace perturbkit

#endif  // PERTURBKIT_ERRORS_HPP_
