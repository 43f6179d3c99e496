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

#ifndef UAPSEG_EVAL_HPP_
#define UAPSEG_EVAL_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uapseg/data.hpp"
#include "uapseg/model.hpp"
#include "uapseg/tensor.hpp"

namespace uapseg {

// K x K pixel counts; rows are ground truth, columns are predictions.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int num_classes)
      : k_(num_classes),
        counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {}

  int num_classes() const { return k_; }
  int64_t at(int truth, int pred) const {
    return counts_[static_cast<std::size_t>(truth) * k_ + pred];
  }
  int64_t& at(int truth, int pred) {
    return counts_[static_cast<std::size_t>(truth) * k_ + pred];
  }
  int64_t Total() const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  int k_ = 0;
  std::vector<int64_t> counts_;
};

// Adds one count per valid pixel. Throws kData for values outside [0, K)
// (other than ignore in labels) and kDimension for mismatched maps.
void AccumulateConfusion(const LabelMap& preds, const LabelMap& labels,
                         int ignore_label, ConfusionMatrix& acc);

struct MiouResult {
  double miou = 0.0;
  // Absent for classes with TP + FP + FN == 0.
  std::vector<std::optional<double>> per_class_iou;
};

// IoU_c = TP / (TP + FP + FN), averaged over classes with a non-zero
// denominator. Throws kUndefinedMetric on an all-zero matrix.
MiouResult ComputeMiou(const ConfusionMatrix& confusion);

struct EvalReport {
  ConfusionMatrix confusion;
  std::vector<std::optional<double>> per_class_iou;
  double miou = 0.0;
  std::string model_id;
  std::string perturbation_id = "benign";
  double epsilon = 0.0;
};

// Benign when perturbation is null, otherwise on clamp(x + delta, 0, 1).
EvalReport Evaluate(const Segmenter& model, const Dataset& data,
                    const Perturbation* perturbation = nullptr);

// entry[i][j] = mIoU of models[j] under perturbations[i]. A null
// perturbation yields the benign row.
std::vector<std::vector<double>> TransferMatrix(
    const std::vector<const Perturbation*>& perturbations,
    const std::vector<const Segmenter*>& models, const Dataset& data);

// Human-readable table and a key=value file; both are plain text.
std::string FormatReportTable(const EvalReport& report);
std::string FormatReportKeyValue(const EvalReport& report);
void WriteTextFile(const std::string& path, const std::string& contents);

using Rgb = std::array<uint8_t, 3>;

// Fixed, distinct colors; never black (black marks ignore).
std::vector<Rgb> DefaultPalette(int num_colors);

// Writes a binary PPM with one palette color per class. Throws kConfig when
// a value other than ignore_label has no palette entry.
void RenderMask(const LabelMap& map, const std::vector<Rgb>& palette,
                int ignore_label, const std::string& path);

}  // namespace uapseg

#endif  // UAPSEG_EVAL_HPP_
