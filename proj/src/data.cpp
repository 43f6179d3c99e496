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

#include "uapseg/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "uapseg/error.hpp"
#include "uapseg/netpbm.hpp"

namespace uapseg {
namespace {

namespace fs = std::filesystem;

constexpr char kPerturbationMagic[9] = "UAPPERT1";

class Fnv1a {
 public:
  void Add(const void* p, std::size_t n) {
    const auto* b = static_cast<const uint8_t*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  template <typename T>
  void AddValue(T v) {
    Add(&v, sizeof(v));
  }
  std::string Hex(int digits = 16) const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h_));
    return std::string(buf + 16 - digits, buf + 16);
  }

 private:
  uint64_t h_ = 0xcbf29ce484222325ULL;
};

double Quantize(double v) {
  return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
}

// Tint added to a gray base for each foreground class. Classes beyond the
// first three cycle through mixed tints.
std::array<double, 3> ClassTint(int cls) {
  static constexpr std::array<std::array<double, 3>, 6> kTints = {{
      {1.0, -0.5, -0.5},
      {-0.5, 1.0, -0.5},
      {-0.5, -0.5, 1.0},
      {0.75, 0.75, -1.0},
      {0.75, -1.0, 0.75},
      {-1.0, 0.75, 0.75},
  }};
  return kTints[(cls - 1) % kTints.size()];
}

}  // namespace

Shape3 Dataset::image_shape() const {
  if (examples.empty()) return Shape3{};
  return examples.front().image.shape();
}

std::vector<std::vector<SegmentationBatch>> MakeBatchSchedule(
    const Dataset& data, int epochs, int batch_size, uint64_t seed) {
  if (batch_size <= 0) Fail(ErrorCode::kConfig, "batch size must be positive");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(data.size());
  std::vector<std::vector<SegmentationBatch>> schedule;
  for (int e = 0; e < epochs; ++e) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<SegmentationBatch> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      SegmentationBatch b;
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(batch_size));
      for (std::size_t i = start; i < end; ++i) {
        b.push_back(&data.examples[order[i]]);
      }
      batches.push_back(std::move(b));
    }
    schedule.push_back(std::move(batches));
  }
  return schedule;
}

Tensor3 PadToEven(const Tensor3& image) {
  const int h = image.height() + image.height() % 2;
  const int w = image.width() + image.width() % 2;
  if (h == image.height() && w == image.width()) return image;
  Tensor3 out(image.channels(), h, w);
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      const int sy = std::min(y, image.height() - 1);
      for (int x = 0; x < w; ++x) {
        out.at(c, y, x) = image.at(c, sy, std::min(x, image.width() - 1));
      }
    }
  }
  return out;
}

LabelMap PadToEven(const LabelMap& labels, int ignore_label) {
  const int h = labels.height() + labels.height() % 2;
  const int w = labels.width() + labels.width() % 2;
  if (h == labels.height() && w == labels.width()) return labels;
  LabelMap out(h, w, ignore_label);
  for (int y = 0; y < labels.height(); ++y) {
    for (int x = 0; x < labels.width(); ++x) out.at(y, x) = labels.at(y, x);
  }
  return out;
}

Dataset GenerateShapesDataset(int n, const ShapesOptions& options) {
  if (options.num_classes < 2) {
    Fail(ErrorCode::kConfig, "num_classes must be >= 2");
  }
  if (options.height < 4 || options.width < 4) {
    Fail(ErrorCode::kConfig, "image size must be at least 4x4");
  }
  Dataset data;
  data.num_classes = options.num_classes;
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, options.noise);
  const int h = options.height;
  const int w = options.width;
  const int min_side = std::max(3, std::min(h, w) / 4);
  const int max_side = std::max(min_side + 1, std::min(h, w) / 2);

  for (int i = 0; i < n; ++i) {
    Example ex;
    char id[32];
    std::snprintf(id, sizeof(id), "shape-%06d", i);
    ex.id = id;
    Tensor3 img(3, h, w);
    LabelMap labels(h, w, 0);

    // Gray background with a gentle linear gradient.
    const double base = 0.3 + 0.4 * unit(rng);
    const double gy = (unit(rng) - 0.5) * 0.16;
    const double gx = (unit(rng) - 0.5) * 0.16;
    std::vector<double> gray(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        gray[y * w + x] = base + gy * (y / double(h) - 0.5) +
                          gx * (x / double(w) - 0.5);
      }
    }

    std::vector<std::array<double, 3>> tint(gray.size(), {0.0, 0.0, 0.0});
    const int num_shapes = 1 + static_cast<int>(unit(rng) * 3.0);
    for (int s = 0; s < num_shapes; ++s) {
      const int cls = 1 + static_cast<int>(unit(rng) * (options.num_classes - 1));
      std::array<double, 3> t = ClassTint(cls);
      const double jitter = 0.85 + 0.3 * unit(rng);
      for (double& v : t) v *= jitter * options.tint;
      const int sh = min_side + static_cast<int>(unit(rng) * (max_side - min_side));
      const int sw = min_side + static_cast<int>(unit(rng) * (max_side - min_side));
      const int y0 = static_cast<int>(unit(rng) * (h - sh + 1));
      const int x0 = static_cast<int>(unit(rng) * (w - sw + 1));
      const bool ellipse = unit(rng) < 0.5;
      const double cy = y0 + (sh - 1) / 2.0;
      const double cx = x0 + (sw - 1) / 2.0;
      const double ry = sh / 2.0;
      const double rx = sw / 2.0;
      for (int y = y0; y < y0 + sh; ++y) {
        for (int x = x0; x < x0 + sw; ++x) {
          if (ellipse) {
            const double dy = (y - cy) / ry;
            const double dx = (x - cx) / rx;
            if (dy * dy + dx * dx > 1.0) continue;
          }
          labels.at(y, x) = cls;
          tint[y * w + x] = t;
        }
      }
    }

    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * w + x;
          img.at(c, y, x) = Quantize(gray[p] + tint[p][c] + noise(rng));
        }
      }
    }
    ex.image = PadToEven(img);
    ex.labels = PadToEven(labels, data.ignore_label);
    data.examples.push_back(std::move(ex));
  }
  return data;
}

DatasetSplit SplitTrainEval(const Dataset& data) {
  DatasetSplit split;
  split.train.num_classes = split.eval.num_classes = data.num_classes;
  split.train.ignore_label = split.eval.ignore_label = data.ignore_label;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (i % 5 == 4 ? split.eval : split.train).examples.push_back(data.examples[i]);
  }
  return split;
}

std::string DatasetFingerprint(const Dataset& data) {
  Fnv1a h;
  h.AddValue<int32_t>(data.num_classes);
  h.AddValue<int32_t>(data.ignore_label);
  for (const Example& ex : data.examples) {
    h.Add(ex.id.data(), ex.id.size());
    h.AddValue<int32_t>(ex.image.channels());
    h.AddValue<int32_t>(ex.image.height());
    h.AddValue<int32_t>(ex.image.width());
    for (double v : ex.image.values()) h.AddValue<double>(v);
    for (int32_t v : ex.labels.values()) h.AddValue<int32_t>(v);
  }
  return h.Hex();
}

void SaveCorpus(const Dataset& data, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "images", ec);
  fs::create_directories(fs::path(dir) / "labels", ec);
  if (ec) Fail(ErrorCode::kIo, "cannot create corpus directory: " + dir);
  for (const Example& ex : data.examples) {
    PnmImage img;
    img.width = ex.image.width();
    img.height = ex.image.height();
    img.channels = 3;
    img.samples.resize(static_cast<std::size_t>(img.width) * img.height * 3);
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        for (int c = 0; c < 3; ++c) {
          img.samples[(static_cast<std::size_t>(y) * img.width + x) * 3 + c] =
              static_cast<uint16_t>(
                  std::lround(std::clamp(ex.image.at(c, y, x), 0.0, 1.0) * 255.0));
        }
      }
    }
    WritePnm(img, (fs::path(dir) / "images" / (ex.id + ".ppm")).string());

    PnmImage lab;
    lab.width = ex.labels.width();
    lab.height = ex.labels.height();
    lab.channels = 1;
    lab.samples.resize(ex.labels.size());
    for (std::size_t p = 0; p < ex.labels.size(); ++p) {
      if (ex.labels[p] < 0 || ex.labels[p] > 255) {
        Fail(ErrorCode::kData, "label does not fit in 8 bits: " + ex.id);
      }
      lab.samples[p] = static_cast<uint16_t>(ex.labels[p]);
    }
    WritePnm(lab, (fs::path(dir) / "labels" / (ex.id + ".pgm")).string());
  }
}

LoadResult LoadCorpus(const std::string& image_dir,
                      const std::string& label_dir, int num_classes,
                      int ignore_label) {
  LoadResult result;
  result.data.num_classes = num_classes;
  result.data.ignore_label = ignore_label;
  if (num_classes < 2) Fail(ErrorCode::kConfig, "num_classes must be >= 2");

  auto list_stems = [](const std::string& dir, std::initializer_list<const char*> exts) {
    if (!fs::is_directory(dir)) Fail(ErrorCode::kIo, "not a directory: " + dir);
    std::map<std::string, fs::path> stems;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const std::string ext = entry.path().extension().string();
      for (const char* e : exts) {
        if (ext == e) stems[entry.path().stem().string()] = entry.path();
      }
    }
    return stems;
  };
  const auto images = list_stems(image_dir, {".ppm", ".pgm"});
  const auto labels = list_stems(label_dir, {".pgm"});

  std::vector<std::string> unmatched;
  for (const auto& [stem, path] : images) {
    if (!labels.count(stem)) unmatched.push_back(path.string());
  }
  for (const auto& [stem, path] : labels) {
    if (!images.count(stem)) unmatched.push_back(path.string());
  }
  if (!unmatched.empty()) {
    std::string msg = "unmatched corpus files:";
    for (const auto& u : unmatched) msg += " " + u;
    Fail(ErrorCode::kData, msg);
  }
  if (images.empty()) {
    result.warnings.push_back("corpus is empty: " + image_dir);
    return result;
  }

  std::vector<std::string> bad_labels;
  for (const auto& [stem, image_path] : images) {
    const PnmImage img = ReadPnm(image_path.string());
    const PnmImage lab = ReadPnm(labels.at(stem).string());
    if (lab.channels != 1) {
      Fail(ErrorCode::kData, "label file is not single-channel: " +
                                 labels.at(stem).string());
    }
    if (img.width != lab.width || img.height != lab.height) {
      Fail(ErrorCode::kData, "image/label size mismatch for " + stem);
    }
    Example ex;
    ex.id = stem;
    Tensor3 t(3, img.height, img.width);
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
          t.at(c, y, x) = img.at(y, x, img.channels == 3 ? c : 0) /
                          static_cast<double>(img.maxval);
        }
      }
    }
    LabelMap lm(lab.height, lab.width);
    bool bad = false;
    bool any_valid = false;
    for (std::size_t p = 0; p < lm.size(); ++p) {
      lm[p] = lab.samples[p];
      if (lm[p] == ignore_label) continue;
      any_valid = true;
      if (lm[p] >= num_classes) bad = true;
    }
    if (bad) {
      bad_labels.push_back(labels.at(stem).string());
      continue;
    }
    if (!any_valid) {
      result.warnings.push_back("skipping " + stem + ": no valid pixels");
      continue;
    }
    if (img.height % 2 || img.width % 2) {
      result.warnings.push_back("padded " + stem + " to even dimensions");
    }
    ex.image = PadToEven(t);
    ex.labels = PadToEven(lm, ignore_label);
    if (!result.data.examples.empty() &&
        !(result.data.image_shape() == ex.image.shape())) {
      Fail(ErrorCode::kDimension,
           "image " + stem + " has shape " + ex.image.shape().ToString() +
               ", corpus uses " + result.data.image_shape().ToString());
    }
    result.data.examples.push_back(std::move(ex));
  }
  if (!bad_labels.empty()) {
    std::string msg = "label values >= " + std::to_string(num_classes) + " in:";
    for (const auto& b : bad_labels) msg += " " + b;
    Fail(ErrorCode::kData, msg);
  }
  return result;
}

Perturbation Perturbation::Zeros(Shape3 shape, double epsilon) {
  Perturbation p;
  p.shape = shape;
  p.delta.assign(shape.size(), 0.0f);
  p.epsilon = static_cast<float>(epsilon);
  return p;
}

Tensor3 Perturbation::AsTensor() const {
  Tensor3 t(shape);
  for (std::size_t i = 0; i < delta.size(); ++i) t[i] = delta[i];
  return t;
}

double Perturbation::MaxAbs() const {
  double m = 0.0;
  for (float v : delta) m = std::max(m, std::abs(static_cast<double>(v)));
  return m;
}

std::string Perturbation::Id() const {
  Fnv1a h;
  h.AddValue<float>(epsilon);
  h.Add(trained_on.data(), trained_on.size());
  h.Add(delta.data(), delta.size() * sizeof(float));
  return "uap-" + h.Hex(8);
}

void SavePerturbation(const Perturbation& p, const std::string& path) {
  if (p.delta.size() != p.shape.size()) {
    Fail(ErrorCode::kDimension, "perturbation data does not match its shape");
  }
  if (p.MaxAbs() > static_cast<double>(p.epsilon) + 1e-9) {
    Fail(ErrorCode::kIntegrity, "perturbation exceeds its epsilon bound");
  }
  binio::Writer w;
  w.Bytes(kPerturbationMagic, 8);
  w.I32(p.shape.channels);
  w.I32(p.shape.height);
  w.I32(p.shape.width);
  w.F32(p.epsilon);
  w.String(p.trained_on);
  for (float v : p.delta) w.F32(v);
  w.WriteFile(path);
}

Perturbation LoadPerturbation(const std::string& path) {
  binio::Reader r = binio::Reader::FromFile(path);
  r.ExpectMagic(kPerturbationMagic);
  Perturbation p;
  p.shape.channels = r.I32();
  p.shape.height = r.I32();
  p.shape.width = r.I32();
  if (p.shape.channels <= 0 || p.shape.height <= 0 || p.shape.width <= 0 ||
      p.shape.size() > (1u << 28)) {
    Fail(ErrorCode::kFormat, "bad perturbation dimensions in " + path);
  }
  p.epsilon = r.F32();
  p.trained_on = r.String();
  if (r.remaining() != p.shape.size() * 4) {
    Fail(ErrorCode::kFormat, "perturbation payload size mismatch in " + path);
  }
  p.delta.resize(p.shape.size());
  for (float& v : p.delta) v = r.F32();
  if (!std::isfinite(p.epsilon) || p.epsilon < 0.0f) {
    Fail(ErrorCode::kIntegrity, "invalid epsilon in " + path);
  }
  for (float v : p.delta) {
    if (!std::isfinite(v) ||
        std::abs(static_cast<double>(v)) > static_cast<double>(p.epsilon) + 1e-9) {
      Fail(ErrorCode::kIntegrity,
           "perturbation in " + path + " violates |delta| <= epsilon");
    }
  }
  return p;
}

}  // namespace uapseg
