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

#ifndef UAPSEG_DATA_HPP_
#define UAPSEG_DATA_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "uapseg/tensor.hpp"

namespace uapseg {

struct Example {
  std::string id;
  Tensor3 image;    // [C x H x W] in [0, 1]
  LabelMap labels;  // [H x W] in {0..K-1} plus the ignore label
};

// All examples share spatial dims, which are even.
struct Dataset {
  std::vector<Example> examples;
  int num_classes = 0;
  int ignore_label = 255;

  bool empty() const { return examples.empty(); }
  std::size_t size() const { return examples.size(); }
  Shape3 image_shape() const;
};

// A mini-batch is a view onto dataset examples.
using SegmentationBatch = std::vector<const Example*>;

// Epoch-major batch schedule: the example order of each epoch is a fresh
// shuffle drawn from one generator seeded with `seed`.
std::vector<std::vector<SegmentationBatch>> MakeBatchSchedule(
    const Dataset& data, int epochs, int batch_size, uint64_t seed);

struct ShapesOptions {
  int num_classes = 4;
  int height = 32;
  int width = 32;
  uint64_t seed = 0;
  // Magnitude of the per-class color tint over the gray background.
  double tint = 0.08;
  // Std-dev of the i.i.d. Gaussian pixel noise.
  double noise = 0.02;
};

// Random colored rectangles and ellipses over a smooth background. Class 0
// is background; every image holds at least one foreground shape. Pixel
// values are multiples of 1/255 so a PPM round trip is exact. Odd sizes are
// rounded up to even (the extra row/column reflects the last one).
Dataset GenerateShapesDataset(int n, const ShapesOptions& options);

// Deterministic id-based split: every fifth example (index % 5 == 4) is
// held out for evaluation.
struct DatasetSplit {
  Dataset train;
  Dataset eval;
};
DatasetSplit SplitTrainEval(const Dataset& data);

// 64-bit FNV-1a over ids, shapes, pixels and labels, as 16 hex digits.
std::string DatasetFingerprint(const Dataset& data);

// Corpus layout: <dir>/images/<stem>.ppm and <dir>/labels/<stem>.pgm.
void SaveCorpus(const Dataset& data, const std::string& dir);

struct LoadResult {
  Dataset data;
  std::vector<std::string> warnings;
};
// Pairs files by stem, scales images to [0, 1], validates labels against
// num_classes and pads odd dims (reflect for images, ignore for labels).
// Throws kData listing unmatched or invalid files.
LoadResult LoadCorpus(const std::string& image_dir,
                      const std::string& label_dir, int num_classes,
                      int ignore_label);

// Reflect-pads an image (and pads labels with ignore) to even dims.
Tensor3 PadToEven(const Tensor3& image);
LabelMap PadToEven(const LabelMap& labels, int ignore_label);

// Universal perturbation. delta is float-valued so the on-disk format round
// trips exactly; |delta| <= epsilon holds at all times.
struct Perturbation {
  Shape3 shape;
  std::vector<float> delta;
  float epsilon = 0.0f;
  std::string trained_on;
  int steps = 0;

  static Perturbation Zeros(Shape3 shape, double epsilon);
  Tensor3 AsTensor() const;
  double MaxAbs() const;
  // Short content hash used as the perturbation id in reports.
  std::string Id() const;
};

// "UAPPERT1", i32 C/H/W, f32 epsilon, u32-length-prefixed UTF-8 model id,
// then C*H*W little-endian float32 values.
void SavePerturbation(const Perturbation& p, const std::string& path);
// Throws kFormat on bad magic or truncation and kIntegrity if the stored
// delta leaves the epsilon ball.
Perturbation LoadPerturbation(const std::string& path);

}  // namespace uapseg

#endif  // UAPSEG_DATA_HPP_
