/* Copyright 2026 The uapseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Little-endian binary helpers shared by the checkpoint and perturbation
// formats.

#ifndef UAPSEG_SRC_BINARY_IO_HPP_
#define UAPSEG_SRC_BINARY_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "uapseg/error.hpp"

namespace uapseg::binio {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

class Writer {
 public:
  void Bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void U32(uint32_t v) { Bytes(&v, 4); }
  void I32(int32_t v) { Bytes(&v, 4); }
  void U64(uint64_t v) { Bytes(&v, 8); }
  void F32(float v) { Bytes(&v, 4); }
  void String(const std::string& s) {
    U32(static_cast<uint32_t>(s.size()));
    Bytes(s.data(), s.size());
  }

  void WriteFile(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) Fail(ErrorCode::kIo, "cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(buf_.data()),
              static_cast<std::streamsize>(buf_.size()));
    if (!out) Fail(ErrorCode::kIo, "write failed: " + path);
  }

 private:
  std::vector<uint8_t> buf_;
};

class Reader {
 public:
  static Reader FromFile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) Fail(ErrorCode::kIo, "cannot open: " + path);
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
    return Reader(std::move(buf), path);
  }

  void Bytes(void* p, std::size_t n) {
    if (remaining() < n) {
      Fail(ErrorCode::kFormat, "truncated file: " + path_);
    }
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  uint32_t U32() { uint32_t v; Bytes(&v, 4); return v; }
  int32_t I32() { int32_t v; Bytes(&v, 4); return v; }
  uint64_t U64() { uint64_t v; Bytes(&v, 8); return v; }
  float F32() { float v; Bytes(&v, 4); return v; }
  std::string String() {
    const uint32_t n = U32();
    if (remaining() < n) Fail(ErrorCode::kFormat, "truncated file: " + path_);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void ExpectMagic(const char (&magic)[9]) {
    char got[8];
    Bytes(got, 8);
    if (std::memcmp(got, magic, 8) != 0) {
      Fail(ErrorCode::kFormat, "bad magic in " + path_);
    }
  }

  std::size_t remaining() const { return buf_.size() - pos_; }
  const std::string& path() const { return path_; }

 private:
  Reader(std::vector<uint8_t> buf, std::string path)
      : buf_(std::move(buf)), path_(std::move(path)) {}

  std::vector<uint8_t> buf_;
  std::size_t pos_ = 0;
  std::string path_;
};

}  // namespace uapseg::binio

#endif  // UAPSEG_SRC_BINARY_IO_HPP_
