// Copyright 2026 The dpfedemb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPFEDEMB_MATRIX_HPP_
#define DPFEDEMB_MATRIX_HPP_

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace dpfedemb {

// Dense row-major matrix of doubles. Just enough linear algebra for the
// forward/backward passes; not a general-purpose type.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }

  static Matrix from_rows(const std::vector<std::vector<double>>& rows_in) {
    if (rows_in.empty()) return Matrix();
    Matrix m(rows_in.size(), rows_in.front().size());
    for (std::size_t r = 0; r < rows_in.size(); ++r) {
      if (rows_in[r].size() != m.cols) {
        throw std::invalid_argument("Matrix::from_rows: ragged input");
      }
      for (std::size_t c = 0; c < m.cols; ++c) m.at(r, c) = rows_in[r][c];
    }
    return m;
  }
};

}  // namespace dpfedemb

#endif  // DPFEDEMB_MATRIX_HPP_
