#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "nwsd/errors.hpp"

namespace nwsd {

// Dense row-major matrix of doubles. Plain value type: copyable,
// comparable, no hidden state. Anything that needs gradients goes
// through Tape instead of mutating these in place.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0);
  static Matrix row_vector(std::vector<double> values);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> r);

  double& at(int r, int c) { return data[idx(r, c)]; }
  double at(int r, int c) const { return data[idx(r, c)]; }
  std::size_t idx(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
           static_cast<std::size_t>(c);
  }
  std::size_t size() const { return data.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  bool all_finite() const;

  // Copies row r into a 1 x cols matrix.
  Matrix row(int r) const;
};

bool operator==(const Matrix& a, const Matrix& b);

// Numerically safe scalar sigmoid: branches on sign so exp never overflows.
double sigmoid(double x);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transposed(const Matrix& a);

}  // namespace nwsd
