// atts2s/errors.h

// Copyright 2026  The atts2s Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ATTS2S_ERRORS_H_
#define ATTS2S_ERRORS_H_

#include <stdexcept>
#include <string>

namespace atts2s {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &what) : std::runtime_error(what) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string &what)
      : Error("dimension error: " + what) {}
};

class InvalidMaskError : public Error {
 public:
  explicit InvalidMaskError(const std::string &what)
      : Error("invalid mask: " + what) {}
};

class EmptyInputError : public Error {
 public:
  explicit EmptyInputError(const std::string &what)
      : Error("empty input: " + what) {}
};

class IndexError : public Error {
 public:
  explicit IndexError(const std::string &what)
      : Error("index error: " + what) {}
};

/// Invalid configuration value. The CLI maps this (and only this) to the
/// validation exit code.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string &what)
      : Error("config error: " + what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string &what)
      : Error("numerical error: " + what) {}
};

class StaleGraphError : public Error {
 public:
  explicit StaleGraphError(const std::string &what)
      : Error("stale graph: " + what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string &what) : Error("i/o error: " + what) {}
};

/// Malformed binary file. `offset` is the byte position where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string &what, long long offset)
      : Error("format error at byte " + std::to_string(offset) + ": " + what),
        offset_(offset) {}
  long long offset() const { return offset_; }

 private:
  long long offset_;
};

class UnsupportedVersionError : public FormatError {
 public:
  UnsupportedVersionError(int version, long long offset)
      : FormatError("unsupported version " + std::to_string(version), offset) {}
};

}  // namespace atts2s

#endif  // ATTS2S_ERRORS_H_
