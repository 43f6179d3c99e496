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

#include "uapseg/frequency.hpp"

#include <cmath>
#include <string>

#include "uapseg/error.hpp"

namespace uapseg {
namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutableMap = Eigen::Map<Matrix>;

void RequireEvenSize(int n, const char* axis) {
  if (n < 2 || n % 2 != 0) {
    Fail(ErrorCode::kDimension,
         std::string("frequency transform ") + axis +
             " must be even and >= 2, got " + std::to_string(n));
  }
}

void RequireMatchingImage(const Tensor3& x, const FrequencyTransform& t) {
  if (x.height() != t.height() || x.width() != t.width()) {
    Fail(ErrorCode::kDimension,
         "image " + x.shape().ToString() + " does not match transform " +
             std::to_string(t.height()) + "x" + std::to_string(t.width()));
  }
}

}  // namespace

Matrix HaarLowpassFilter(int n) {
  RequireEvenSize(n, "size");
  const double tap = 1.0 / std::sqrt(2.0);
  Matrix filter = Matrix::Zero(n / 2, n);
  for (int i = 0; i < n / 2; ++i) {
    filter(i, 2 * i) = tap;
    filter(i, 2 * i + 1) = tap;
  }
  return filter;
}

FrequencyTransform::FrequencyTransform(int height, int width)
    : height_(height), width_(width) {
  RequireEvenSize(height, "height");
  RequireEvenSize(width, "width");
  row_filter_ = HaarLowpassFilter(height);
  col_filter_ = HaarLowpassFilter(width);
}

Tensor3 LowpassComponent(const Tensor3& x, const FrequencyTransform& t) {
  RequireMatchingImage(x, t);
  const int h = t.height();
  const int w = t.width();
  Tensor3 out(x.channels(), h / 2, w / 2);
  for (int c = 0; c < x.channels(); ++c) {
    ConstMap xc(x.channel(c).data(), h, w);
    MutableMap oc(out.channel(c).data(), h / 2, w / 2);
    oc.noalias() = t.row_filter() * xc * t.col_filter().transpose();
  }
  return out;
}

Tensor3 LowpassProject(const Tensor3& x, const FrequencyTransform& t) {
  RequireMatchingImage(x, t);
  const int h = t.height();
  const int w = t.width();
  Tensor3 out(x.shape());
  Matrix ll(h / 2, w / 2);
  for (int c = 0; c < x.channels(); ++c) {
    ConstMap xc(x.channel(c).data(), h, w);
    MutableMap oc(out.channel(c).data(), h, w);
    ll.noalias() = t.row_filter() * xc * t.col_filter().transpose();
    oc.noalias() = t.row_filter().transpose() * ll * t.col_filter();
  }
  return out;
}

}  // namespace uapseg
