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

#include "uapseg/eval.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "uapseg/attack.hpp"
#include "uapseg/error.hpp"
#include "uapseg/losses.hpp"
#include "uapseg/netpbm.hpp"

namespace uapseg {

int64_t ConfusionMatrix::Total() const {
  int64_t s = 0;
  for (int64_t v : counts_) s += v;
  return s;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.k_ != k_) {
    Fail(ErrorCode::kDimension, "confusion matrices differ in class count");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

void AccumulateConfusion(const LabelMap& preds, const LabelMap& labels,
                         int ignore_label, ConfusionMatrix& acc) {
  if (preds.height() != labels.height() || preds.width() != labels.width()) {
    Fail(ErrorCode::kDimension, "prediction and label maps differ in size");
  }
  const int k = acc.num_classes();
  for (std::size_t p = 0; p < labels.size(); ++p) {
    const int32_t t = labels[p];
    if (t == ignore_label) continue;
    const int32_t q = preds[p];
    if (t < 0 || t >= k || q < 0 || q >= k) {
      Fail(ErrorCode::kData, "label or prediction outside [0, " +
                                 std::to_string(k) + ")");
    }
    ++acc.at(t, q);
  }
}

MiouResult ComputeMiou(const ConfusionMatrix& confusion) {
  if (confusion.Total() == 0) {
    Fail(ErrorCode::kUndefinedMetric, "mIoU of an empty confusion matrix");
  }
  const int k = confusion.num_classes();
  MiouResult out;
  out.per_class_iou.resize(k);
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < k; ++c) {
    const int64_t tp = confusion.at(c, c);
    int64_t fp = 0;
    int64_t fn = 0;
    for (int o = 0; o < k; ++o) {
      if (o == c) continue;
      fp += confusion.at(o, c);
      fn += confusion.at(c, o);
    }
    const int64_t denom = tp + fp + fn;
    if (denom == 0) continue;
    const double iou = static_cast<double>(tp) / static_cast<double>(denom);
    out.per_class_iou[c] = iou;
    sum += iou;
    ++present;
  }
  out.miou = sum / present;
  return out;
}

EvalReport Evaluate(const Segmenter& model, const Dataset& data,
                    const Perturbation* perturbation) {
  EvalReport report;
  report.confusion = ConfusionMatrix(model.num_classes());
  report.model_id = model.model_id();
  Tensor3 delta;
  if (perturbation != nullptr) {
    delta = perturbation->AsTensor();
    report.perturbation_id = perturbation->Id();
    report.epsilon = perturbation->epsilon;
  }
  for (const Example& ex : data.examples) {
    LabelMap pred;
    if (perturbation != nullptr) {
      RequireSameShape(ex.image.shape(), delta.shape(), "perturbation vs image");
      pred = ArgmaxMap(model.Forward(ApplyPerturbation(ex.image, delta)));
    } else {
      pred = ArgmaxMap(model.Forward(ex.image));
    }
    AccumulateConfusion(pred, ex.labels, data.ignore_label, report.confusion);
  }
  const MiouResult m = ComputeMiou(report.confusion);
  report.miou = m.miou;
  report.per_class_iou = m.per_class_iou;
  return report;
}

std::vector<std::vector<double>> TransferMatrix(
    const std::vector<const Perturbation*>& perturbations,
    const std::vector<const Segmenter*>& models, const Dataset& data) {
  std::vector<std::vector<double>> out;
  for (const Perturbation* p : perturbations) {
    std::vector<double> row;
    for (const Segmenter* m : models) row.push_back(Evaluate(*m, data, p).miou);
    out.push_back(std::move(row));
  }
  return out;
}

std::string FormatReportTable(const EvalReport& report) {
  std::ostringstream os;
  os << "model        " << report.model_id << "\n"
     << "perturbation " << report.perturbation_id << "\n"
     << "epsilon      " << std::setprecision(6) << report.epsilon << "\n\n"
     << "class    IoU\n";
  for (std::size_t c = 0; c < report.per_class_iou.size(); ++c) {
    os << std::setw(5) << c << "    ";
    if (report.per_class_iou[c]) {
      os << std::fixed << std::setprecision(4) << *report.per_class_iou[c];
      os.unsetf(std::ios::fixed);
    } else {
      os << "  n/a";
    }
    os << "\n";
  }
  os << "\nmIoU     " << std::fixed << std::setprecision(4) << report.miou
     << "\n";
  return os.str();
}

std::string FormatReportKeyValue(const EvalReport& report) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "model_id=" << report.model_id << "\n"
     << "perturbation_id=" << report.perturbation_id << "\n"
     << "epsilon=" << report.epsilon << "\n"
     << "miou=" << report.miou << "\n"
     << "num_classes=" << report.confusion.num_classes() << "\n"
     << "valid_pixels=" << report.confusion.Total() << "\n";
  for (std::size_t c = 0; c < report.per_class_iou.size(); ++c) {
    os << "iou." << c << "=";
    if (report.per_class_iou[c]) {
      os << *report.per_class_iou[c];
    } else {
      os << "absent";
    }
    os << "\n";
  }
  const int k = report.confusion.num_classes();
  for (int t = 0; t < k; ++t) {
    os << "confusion." << t << "=";
    for (int p = 0; p < k; ++p) {
      os << (p ? "," : "") << report.confusion.at(t, p);
    }
    os << "\n";
  }
  return os.str();
}

void WriteTextFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) Fail(ErrorCode::kIo, "cannot open for writing: " + path);
  out << contents;
  if (!out) Fail(ErrorCode::kIo, "write failed: " + path);
}

std::vector<Rgb> DefaultPalette(int num_colors) {
  // Pascal-VOC style bit interleaving, offset by one so no entry is black.
  std::vector<Rgb> palette;
  for (int i = 0; i < num_colors; ++i) {
    int id = i + 1;
    Rgb c = {0, 0, 0};
    for (int shift = 7; id > 0; --shift, id >>= 3) {
      c[0] |= static_cast<uint8_t>(((id >> 0) & 1) << shift);
      c[1] |= static_cast<uint8_t>(((id >> 1) & 1) << shift);
      c[2] |= static_cast<uint8_t>(((id >> 2) & 1) << shift);
    }
    palette.push_back(c);
  }
  return palette;
}

void RenderMask(const LabelMap& map, const std::vector<Rgb>& palette,
                int ignore_label, const std::string& path) {
  PnmImage img;
  img.width = map.width();
  img.height = map.height();
  img.channels = 3;
  img.samples.resize(map.size() * 3);
  for (std::size_t p = 0; p < map.size(); ++p) {
    const int32_t v = map[p];
    Rgb color = {0, 0, 0};
    if (v != ignore_label) {
      if (v < 0 || static_cast<std::size_t>(v) >= palette.size()) {
        Fail(ErrorCode::kConfig, "palette has " +
                                     std::to_string(palette.size()) +
                                     " colors but map contains class " +
                                     std::to_string(v));
      }
      color = palette[v];
    }
    for (int c = 0; c < 3; ++c) img.samples[p * 3 + c] = color[c];
  }
  WritePnm(img, path);
}

}  // namespace uapseg
