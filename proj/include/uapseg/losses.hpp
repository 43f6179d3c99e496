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

#ifndef UAPSEG_LOSSES_HPP_
#define UAPSEG_LOSSES_HPP_

#include "uapseg/frequency.hpp"
#include "uapseg/tensor.hpp"

namespace uapseg {

inline constexpr int kDefaultIgnoreLabel = 255;

// Per-pixel cross entropy of [K x H x W] logits against a label map.
// Ignored pixels carry ce = 0 and valid = 0.
struct PixelCe {
  std::vector<double> ce;
  BinaryMap valid;
  int valid_count = 0;
};

// mask[p] = 1 iff the pixel is valid and argmax(logits[:, p]) equals the
// label. mask <= valid elementwise; the complement within valid is
// valid - mask.
struct SuccessMask {
  BinaryMap mask;
  BinaryMap valid;
};

struct LossBreakdown {
  double j_pd = 0.0;
  double j_fd = 0.0;
  double j_ls = 0.0;
  double j_total = 0.0;
  double ce_mean = 0.0;
};

// Per-pixel argmax over classes; ties resolve to the lowest class index.
LabelMap ArgmaxMap(const Tensor3& logits);

// Throws kData for labels outside [0, K) other than ignore_label and
// kDimension for mismatched spatial sizes.
void ValidateLabels(const LabelMap& labels, int num_classes, int ignore_label);

PixelCe PixelCeMap(const Tensor3& logits, const LabelMap& labels,
                   int ignore_label);

SuccessMask ComputeSuccessMask(const Tensor3& logits_adv,
                               const LabelMap& labels, int ignore_label);

// lambda * J_suc + (1 - lambda) * J_fail with both terms normalised by the
// valid-pixel count. Returns 0 and sets *empty (when given) if no pixel is
// valid.
double PixelDeviationLoss(const PixelCe& ce, const SuccessMask& mask,
                          double lambda, bool* empty = nullptr);

// d PixelDeviationLoss / d logits with the mask held fixed.
Tensor3 PixelDeviationGrad(const Tensor3& logits_adv, const LabelMap& labels,
                           const SuccessMask& mask, double lambda);

// -MSE(logits_adv, logits_benign) over every entry.
double FeatureDeviationLoss(const Tensor3& logits_adv,
                            const Tensor3& logits_benign);
Tensor3 FeatureDeviationGrad(const Tensor3& logits_adv,
                             const Tensor3& logits_benign);

// -MSE(phi(x_adv), phi(x)).
double LowFrequencyScatteringLoss(const Tensor3& x_adv, const Tensor3& x,
                                  const FrequencyTransform& t);
Tensor3 LowFrequencyScatteringGrad(const Tensor3& x_adv, const Tensor3& x,
                                   const FrequencyTransform& t);

// j_total = j_pd + j_fd + k * j_ls. Throws kNumeric on non-finite input.
LossBreakdown CombineLosses(double j_pd, double j_fd, double j_ls, double k);

}  // namespace uapseg

#endif  // UAPSEG_LOSSES_HPP_
