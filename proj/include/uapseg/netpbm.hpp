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

#ifndef UAPSEG_NETPBM_HPP_
#define UAPSEG_NETPBM_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace uapseg {

// Binary PGM (P5, 1 channel) or PPM (P6, 3 channels) raster. Samples are
// interleaved row-major, as stored on disk.
struct PnmImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  int maxval = 255;
  std::vector<uint16_t> samples;

  uint16_t at(int y, int x, int c) const {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

// Throws kIo if the file cannot be opened and kFormat on malformed content.
PnmImage ReadPnm(const std::string& path);
void WritePnm(const PnmImage& image, const std::string& path);

}  // namespace uapseg

#endif  // UAPSEG_NETPBM_HPP_
