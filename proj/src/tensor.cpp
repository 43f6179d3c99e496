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

#include "uapseg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "uapseg/error.hpp"

namespace uapseg {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kDimension: return "dimension error";
    case ErrorCode::kData: return "data error";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kIntegrity: return "integrity error";
    case ErrorCode::kNumeric: return "numeric error";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kIo: return "io error";
    case ErrorCode::kUndefinedMetric: return "undefined metric";
    case ErrorCode::kTraining: return "training error";
    case ErrorCode::kUsage: return "usage error";
    case ErrorCode::kInternal: return "internal error";
  }
  return "unknown error";
}

std::string Shape3::ToString() const {
  std::ostringstream os;
  os << channels << "x" << height << "x" << width;
  return os.str();
}

void Tensor3::Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double MaxAbs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double MaxAbsDiff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double L2Norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void RequireSameShape(const Shape3& a, const Shape3& b, const char* what) {
  if (!(a == b)) {
    Fail(ErrorCode::kDimension, std::string(what) + ": shape " +
                                    a.ToString() + " does not match " +
                                    b.ToString());
  }
}

}  // namespace uapseg
