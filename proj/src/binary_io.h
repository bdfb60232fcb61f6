// src/binary_io.h

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

// Little-endian encoding helpers for the binary file formats. Files are read
// whole into memory and parsed from a cursor so that every failure can report
// its byte offset.

#ifndef ATTS2S_SRC_BINARY_IO_H_
#define ATTS2S_SRC_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "atts2s/errors.h"

namespace atts2s {
namespace binio {

class Writer {
 public:
  void Bytes(const void *p, std::size_t n) {
    const auto *c = static_cast<const std::uint8_t *>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void U8(std::uint8_t v) { buf_.push_back(v); }
  void U16(std::uint16_t v) { Le(v); }
  void U32(std::uint32_t v) { Le(v); }
  void U64(std::uint64_t v) { Le(v); }
  void F32(float v) { U32(std::bit_cast<std::uint32_t>(v)); }

  /// Writes to `path` through a temporary file, so a failed write never
  /// leaves a partial file under the final name.
  void Save(const std::string &path) const {
    const std::string tmp = path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot open " + path + " for writing");
      out.write(reinterpret_cast<const char *>(buf_.data()), std::streamsize(buf_.size()));
      if (!out) throw IoError("write failed for " + path);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
      throw IoError("cannot move " + tmp + " to " + path);
  }

  const std::vector<std::uint8_t> &buffer() const { return buf_; }

 private:
  template <typename U>
  void Le(U v) {
    for (std::size_t k = 0; k < sizeof(U); ++k) buf_.push_back(std::uint8_t(v >> (8 * k)));
  }
  std::vector<std::uint8_t> buf_;
};

inline std::vector<std::uint8_t> ReadFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t> &buf, std::string what)
      : buf_(buf), what_(std::move(what)) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return buf_.size() - pos_; }

  void Need(std::size_t n, const char *field) const {
    if (remaining() < n)
      throw FormatError(what_ + ": truncated while reading " + field, (long long)pos_);
  }
  std::string Chars(std::size_t n, const char *field) {
    Need(n, field);
    std::string s(reinterpret_cast<const char *>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::uint8_t U8(const char *field) {
    Need(1, field);
    return buf_[pos_++];
  }
  std::uint16_t U16(const char *field) { return Le<std::uint16_t>(field); }
  std::uint32_t U32(const char *field) { return Le<std::uint32_t>(field); }
  std::uint64_t U64(const char *field) { return Le<std::uint64_t>(field); }
  float F32(const char *field) { return std::bit_cast<float>(U32(field)); }

 private:
  template <typename U>
  U Le(const char *field) {
    Need(sizeof(U), field);
    U v = 0;
    for (std::size_t k = 0; k < sizeof(U); ++k) v |= U(buf_[pos_ + k]) << (8 * k);
    pos_ += sizeof(U);
    return v;
  }

  const std::vector<std::uint8_t> &buf_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace binio
}  // namespace atts2s

#endif  // ATTS2S_SRC_BINARY_IO_H_
