// kws/matrix.hpp

// Copyright 2026  kws-e2e authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "kws/error.hpp"

namespace kws {

// Dense row-major double matrix. All training math runs in f64; on-disk
// formats narrow to f32 at the serialization boundary.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
    KWS_CHECK(rows >= 0 && cols >= 0, "matrix dimensions must be non-negative");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

  double* row(int r) { return data_.data() + static_cast<size_t>(r) * cols_; }
  const double* row(int r) const { return data_.data() + static_cast<size_t>(r) * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  Matrix slice_rows(int begin, int end) const {
    KWS_CHECK(0 <= begin && begin <= end && end <= rows_, "row slice out of range");
    Matrix out(end - begin, cols_);
    for (int r = begin; r < end; ++r)
      for (int c = 0; c < cols_; ++c) out(r - begin, c) = (*this)(r, c);
    return out;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// C = A * B
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  KWS_CHECK(a.cols() == b.rows(), "matmul: inner dimensions disagree");
  Matrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (int k = 0; k < a.cols(); ++k) {
      double aik = ai[k];
      if (aik == 0.0) continue;
      const double* bk = b.row(k);
      for (int j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

// C = A^T * B  (A is n x r, B is n x c, C is r x c)
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  KWS_CHECK(a.rows() == b.rows(), "matmul_tn: row counts disagree");
  Matrix c(a.cols(), b.cols());
  for (int n = 0; n < a.rows(); ++n) {
    const double* an = a.row(n);
    const double* bn = b.row(n);
    for (int i = 0; i < a.cols(); ++i) {
      double ani = an[i];
      if (ani == 0.0) continue;
      double* ci = c.row(i);
      for (int j = 0; j < b.cols(); ++j) ci[j] += ani * bn[j];
    }
  }
  return c;
}

// C = A * B^T  (A is n x k, B is m x k, C is n x m)
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  KWS_CHECK(a.cols() == b.cols(), "matmul_nt: column counts disagree");
  Matrix c(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (int j = 0; j < b.rows(); ++j) {
      const double* bj = b.row(j);
      double s = 0.0;
      for (int k = 0; k < a.cols(); ++k) s += ai[k] * bj[k];
      ci[j] = s;
    }
  }
  return c;
}

}  // namespace kws
