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

#include "uapseg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uapseg/error.hpp"

namespace uapseg {
namespace {

void RequireSpatialMatch(const Tensor3& logits, const LabelMap& labels) {
  if (logits.height() != labels.height() || logits.width() != labels.width()) {
    Fail(ErrorCode::kDimension,
         "logits " + logits.shape().ToString() + " do not match labels " +
             std::to_string(labels.height()) + "x" +
             std::to_string(labels.width()));
  }
}

// Stable log-sum-exp over the class axis at pixel p.
double LogSumExp(const Tensor3& logits, std::size_t p, std::size_t plane) {
  const int k = logits.channels();
  double m = logits[p];
  for (int c = 1; c < k; ++c) m = std::max(m, logits[c * plane + p]);
  double s = 0.0;
  for (int c = 0; c < k; ++c) s += std::exp(logits[c * plane + p] - m);
  return m + std::log(s);
}

double MeanSquaredError(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return a.empty() ? 0.0 : s / static_cast<double>(a.size());
}

}  // namespace

LabelMap ArgmaxMap(const Tensor3& logits) {
  const std::size_t plane = logits.shape().plane();
  LabelMap out(logits.height(), logits.width());
  for (std::size_t p = 0; p < plane; ++p) {
    int best = 0;
    double best_v = logits[p];
    for (int c = 1; c < logits.channels(); ++c) {
      const double v = logits[c * plane + p];
      if (v > best_v) {
        best_v = v;
        best = c;
      }
    }
    out[p] = best;
  }
  return out;
}

void ValidateLabels(const LabelMap& labels, int num_classes,
                    int ignore_label) {
  for (std::size_t p = 0; p < labels.size(); ++p) {
    const int32_t v = labels[p];
    if (v == ignore_label) continue;
    if (v < 0 || v >= num_classes) {
      Fail(ErrorCode::kData, "label value " + std::to_string(v) +
                                 " outside [0, " +
                                 std::to_string(num_classes) + ")");
    }
  }
}

PixelCe PixelCeMap(const Tensor3& logits, const LabelMap& labels,
                   int ignore_label) {
  RequireSpatialMatch(logits, labels);
  ValidateLabels(labels, logits.channels(), ignore_label);
  const std::size_t plane = logits.shape().plane();
  PixelCe out;
  out.ce.assign(plane, 0.0);
  out.valid.assign(plane, 0);
  for (std::size_t p = 0; p < plane; ++p) {
    const int32_t y = labels[p];
    if (y == ignore_label) continue;
    out.ce[p] = LogSumExp(logits, p, plane) - logits[y * plane + p];
    out.valid[p] = 1;
    ++out.valid_count;
  }
  return out;
}

SuccessMask ComputeSuccessMask(const Tensor3& logits_adv,
                               const LabelMap& labels, int ignore_label) {
  RequireSpatialMatch(logits_adv, labels);
  ValidateLabels(labels, logits_adv.channels(), ignore_label);
  const LabelMap pred = ArgmaxMap(logits_adv);
  SuccessMask out;
  out.mask.assign(labels.size(), 0);
  out.valid.assign(labels.size(), 0);
  for (std::size_t p = 0; p < labels.size(); ++p) {
    if (labels[p] == ignore_label) continue;
    out.valid[p] = 1;
    out.mask[p] = pred[p] == labels[p] ? 1 : 0;
  }
  return out;
}

double PixelDeviationLoss(const PixelCe& ce, const SuccessMask& mask,
                          double lambda, bool* empty) {
  if (ce.ce.size() != mask.mask.size()) {
    Fail(ErrorCode::kDimension, "CE map and success mask sizes differ");
  }
  if (empty != nullptr) *empty = ce.valid_count == 0;
  if (ce.valid_count == 0) return 0.0;
  double suc = 0.0;
  double fail = 0.0;
  for (std::size_t p = 0; p < ce.ce.size(); ++p) {
    if (!ce.valid[p]) continue;
    if (mask.mask[p]) {
      suc += ce.ce[p];
    } else {
      fail += ce.ce[p];
    }
  }
  const double n = static_cast<double>(ce.valid_count);
  const double j_suc = -suc / n;
  const double j_fail = -fail / n;
  return lambda * j_suc + (1.0 - lambda) * j_fail;
}

Tensor3 PixelDeviationGrad(const Tensor3& logits_adv, const LabelMap& labels,
                           const SuccessMask& mask, double lambda) {
  RequireSpatialMatch(logits_adv, labels);
  const std::size_t plane = logits_adv.shape().plane();
  const int k = logits_adv.channels();
  Tensor3 grad(logits_adv.shape());
  int valid_count = 0;
  for (std::size_t p = 0; p < plane; ++p) valid_count += mask.valid[p];
  if (valid_count == 0) return grad;
  const double n = static_cast<double>(valid_count);
  for (std::size_t p = 0; p < plane; ++p) {
    if (!mask.valid[p]) continue;
    const double weight = (mask.mask[p] ? lambda : 1.0 - lambda) / n;
    const double lse = LogSumExp(logits_adv, p, plane);
    // d(-w * CE)/dz_c = -w * (softmax_c - [c == y]).
    for (int c = 0; c < k; ++c) {
      const double prob = std::exp(logits_adv[c * plane + p] - lse);
      const double onehot = c == labels[p] ? 1.0 : 0.0;
      grad[c * plane + p] = -weight * (prob - onehot);
    }
  }
  return grad;
}

double FeatureDeviationLoss(const Tensor3& logits_adv,
                            const Tensor3& logits_benign) {
  RequireSameShape(logits_adv.shape(), logits_benign.shape(),
                   "feature deviation");
  return -MeanSquaredError(logits_adv.values(), logits_benign.values());
}

Tensor3 FeatureDeviationGrad(const Tensor3& logits_adv,
                             const Tensor3& logits_benign) {
  RequireSameShape(logits_adv.shape(), logits_benign.shape(),
                   "feature deviation");
  Tensor3 grad(logits_adv.shape());
  const double scale = -2.0 / static_cast<double>(logits_adv.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i] = scale * (logits_adv[i] - logits_benign[i]);
  }
  return grad;
}

double LowFrequencyScatteringLoss(const Tensor3& x_adv, const Tensor3& x,
                                  const FrequencyTransform& t) {
  RequireSameShape(x_adv.shape(), x.shape(), "low-frequency scattering");
  const Tensor3 pa = LowpassProject(x_adv, t);
  const Tensor3 pb = LowpassProject(x, t);
  return -MeanSquaredError(pa.values(), pb.values());
}

Tensor3 LowFrequencyScatteringGrad(const Tensor3& x_adv, const Tensor3& x,
                                   const FrequencyTransform& t) {
  RequireSameShape(x_adv.shape(), x.shape(), "low-frequency scattering");
  // phi is linear, so phi(x_adv) - phi(x) = phi(x_adv - x).
  Tensor3 diff(x.shape());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = x_adv[i] - x[i];
  Tensor3 residual = LowpassProject(diff, t);
  const double scale = -2.0 / static_cast<double>(x.size());
  for (std::size_t i = 0; i < residual.size(); ++i) residual[i] *= scale;
  return LowpassProjectBackward(residual, t);
}

LossBreakdown CombineLosses(double j_pd, double j_fd, double j_ls, double k) {
  if (!std::isfinite(j_pd) || !std::isfinite(j_fd) || !std::isfinite(j_ls) ||
      !std::isfinite(k)) {
    Fail(ErrorCode::kNumeric, "non-finite loss term");
  }
  LossBreakdown out;
  out.j_pd = j_pd;
  out.j_fd = j_fd;
  out.j_ls = j_ls;
  out.j_total = j_pd + j_fd + k * j_ls;
  return out;
}

}  // namespace uapseg
