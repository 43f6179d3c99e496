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

#include "uapseg/netpbm.hpp"

#include <cctype>
#include <fstream>
#include <iterator>

#include "uapseg/error.hpp"

namespace uapseg {
namespace {

class HeaderParser {
 public:
  HeaderParser(const std::vector<uint8_t>& buf, const std::string& path)
      : buf_(buf), path_(path) {}

  int NextInt() {
    SkipSpaceAndComments();
    if (pos_ >= buf_.size() || !std::isdigit(buf_[pos_])) {
      Fail(ErrorCode::kFormat, "malformed netpbm header: " + path_);
    }
    long v = 0;
    while (pos_ < buf_.size() && std::isdigit(buf_[pos_])) {
      v = v * 10 + (buf_[pos_++] - '0');
      if (v > 1 << 24) Fail(ErrorCode::kFormat, "header value too large: " + path_);
    }
    return static_cast<int>(v);
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t RasterStart() {
    if (pos_ >= buf_.size() || !std::isspace(buf_[pos_])) {
      Fail(ErrorCode::kFormat, "malformed netpbm header: " + path_);
    }
    return pos_ + 1;
  }

  std::size_t pos_ = 2;

 private:
  void SkipSpaceAndComments() {
    while (pos_ < buf_.size()) {
      if (std::isspace(buf_[pos_])) {
        ++pos_;
      } else if (buf_[pos_] == '#') {
        while (pos_ < buf_.size() && buf_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<uint8_t>& buf_;
  const std::string& path_;
};

}  // namespace

PnmImage ReadPnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open image: " + path);
  const std::vector<uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 2 || buf[0] != 'P' || (buf[1] != '5' && buf[1] != '6')) {
    Fail(ErrorCode::kFormat, "not a binary PGM/PPM file: " + path);
  }
  PnmImage img;
  img.channels = buf[1] == '6' ? 3 : 1;
  HeaderParser hp(buf, path);
  img.width = hp.NextInt();
  img.height = hp.NextInt();
  img.maxval = hp.NextInt();
  if (img.width <= 0 || img.height <= 0 || img.maxval <= 0 ||
      img.maxval > 65535) {
    Fail(ErrorCode::kFormat, "bad netpbm dimensions or maxval: " + path);
  }
  const std::size_t start = hp.RasterStart();
  const std::size_t bytes_per = img.maxval > 255 ? 2 : 1;
  const std::size_t count =
      static_cast<std::size_t>(img.width) * img.height * img.channels;
  if (buf.size() - start < count * bytes_per) {
    Fail(ErrorCode::kFormat, "truncated raster: " + path);
  }
  img.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    uint16_t v = buf[start + i * bytes_per];
    if (bytes_per == 2) v = static_cast<uint16_t>(v << 8 | buf[start + 2 * i + 1]);
    if (v > img.maxval) Fail(ErrorCode::kFormat, "sample exceeds maxval: " + path);
    img.samples[i] = v;
  }
  return img;
}

void WritePnm(const PnmImage& image, const std::string& path) {
  if (image.channels != 1 && image.channels != 3) {
    Fail(ErrorCode::kFormat, "netpbm supports 1 or 3 channels");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIo, "cannot open for writing: " + path);
  out << (image.channels == 3 ? "P6" : "P5") << "\n"
      << image.width << " " << image.height << "\n"
      << image.maxval << "\n";
  const bool wide = image.maxval > 255;
  for (uint16_t v : image.samples) {
    if (wide) out.put(static_cast<char>(v >> 8));
    out.put(static_cast<char>(v & 0xff));
  }
  if (!out) Fail(ErrorCode::kIo, "write failed: " + path);
}

}  // namespace uapseg
