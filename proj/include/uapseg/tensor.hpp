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

#ifndef UAPSEG_TENSOR_HPP_
#define UAPSEG_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace uapseg {

struct Shape3 {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(channels) * height * width;
  }
  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  bool operator==(const Shape3&) const = default;
  std::string ToString() const;
};

// Dense channel-major [C x H x W] array of doubles. Used for images,
// perturbations, logits and their gradients.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(Shape3 shape, double fill = 0.0)
      : shape_(shape), data_(shape.size(), fill) {}
  Tensor3(int channels, int height, int width, double fill = 0.0)
      : Tensor3(Shape3{channels, height, width}, fill) {}

  const Shape3& shape() const { return shape_; }
  int channels() const { return shape_.channels; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  std::size_t size() const { return data_.size(); }

  double& at(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * shape_.height + y) *
                     shape_.width + x];
  }
  double at(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * shape_.height + y) *
                     shape_.width + x];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> channel(int c) {
    return std::span<double>(data_).subspan(c * shape_.plane(), shape_.plane());
  }
  std::span<const double> channel(int c) const {
    return std::span<const double>(data_).subspan(c * shape_.plane(),
                                                  shape_.plane());
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void Fill(double v);

 private:
  Shape3 shape_;
  std::vector<double> data_;
};

// Per-pixel integer class map [H x W].
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(int height, int width, int32_t fill = 0)
      : height_(height),
        width_(width),
        data_(static_cast<std::size_t>(height) * width, fill) {}

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }

  int32_t& at(int y, int x) {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  int32_t at(int y, int x) const {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  int32_t& operator[](std::size_t i) { return data_[i]; }
  int32_t operator[](std::size_t i) const { return data_[i]; }
  std::span<const int32_t> values() const { return data_; }

  bool operator==(const LabelMap&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<int32_t> data_;
};

// Binary per-pixel map stored as bytes (0 or 1).
using BinaryMap = std::vector<uint8_t>;

double MaxAbs(std::span<const double> v);
double MaxAbsDiff(std::span<const double> a, std::span<const double> b);
double L2Norm(std::span<const double> v);

// Throws a dimension error naming `what` when the shapes differ.
void RequireSameShape(const Shape3& a, const Shape3& b, const char* what);

}  // namespace uapseg

#endif  // UAPSEG_TENSOR_HPP_
