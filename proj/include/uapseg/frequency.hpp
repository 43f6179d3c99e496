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

#ifndef UAPSEG_FREQUENCY_HPP_
#define UAPSEG_FREQUENCY_HPP_

#include <Eigen/Dense>

#include "uapseg/tensor.hpp"

namespace uapseg {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Single-level orthonormal Haar low-pass analysis operator for H x W images.
//
// row_filter is (H/2 x H) and col_filter is (W/2 x W). Row i of each filter
// holds 1/sqrt(2) at columns 2i and 2i+1, so filter * filter^T = I and
// filter^T * filter is the orthogonal projection onto pairwise-constant
// signals. Immutable after construction.
class FrequencyTransform {
 public:
  // Throws kDimension unless both sizes are even and >= 2.
  FrequencyTransform(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }
  const Matrix& row_filter() const { return row_filter_; }
  const Matrix& col_filter() const { return col_filter_; }

 private:
  int height_;
  int width_;
  Matrix row_filter_;
  Matrix col_filter_;
};

// Haar low-pass analysis matrix of shape (n/2 x n).
Matrix HaarLowpassFilter(int n);

// c_ll = row_filter * x_c * col_filter^T for every channel; output is
// [C x H/2 x W/2].
Tensor3 LowpassComponent(const Tensor3& x, const FrequencyTransform& t);

// phi(x) = row_filter^T * c_ll * col_filter per channel. Linear, symmetric
// and idempotent, so it is also its own input-gradient operator.
Tensor3 LowpassProject(const Tensor3& x, const FrequencyTransform& t);

// Back-propagates an upstream gradient through LowpassProject.
inline Tensor3 LowpassProjectBackward(const Tensor3& upstream,
                                      const FrequencyTransform& t) {
  return LowpassProject(upstream, t);
}

}  // namespace uapseg

#endif  // UAPSEG_FREQUENCY_HPP_
