#include "nwsd/matrix.hpp"

#include <algorithm>

namespace nwsd {

Matrix::Matrix(int r, int c, double fill) {
  if (r < 0 || c < 0) throw ShapeError("matrix dimensions must be non-negative");
  rows = r;
  cols = c;
  data.assign(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill);
}

Matrix Matrix::row_vector(std::vector<double> values) {
  Matrix m;
  m.rows = 1;
  m.cols = static_cast<int>(values.size());
  m.data = std::move(values);
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(static_cast<int>(r.size()), r.size() ? static_cast<int>(r.begin()->size()) : 0);
  int i = 0;
  for (const auto& row : r) {
    if (static_cast<int>(row.size()) != m.cols)
      throw ShapeError("from_rows: ragged initializer");
    int j = 0;
    for (double v : row) m.at(i, j++) = v;
    ++i;
  }
  return m;
}

bool Matrix::all_finite() const {
  return std::all_of(data.begin(), data.end(),
                     [](double v) { return std::isfinite(v); });
}

Matrix Matrix::row(int r) const {
  if (r < 0 || r >= rows) throw ShapeError("row index out of range");
  Matrix out(1, cols);
  std::copy_n(data.begin() + idx(r, 0), cols, out.data.begin());
  return out;
}

bool operator==(const Matrix& a, const Matrix& b) {
  return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw ShapeError("matmul: inner dimensions disagree");
  Matrix out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) {
        out.at(i, j) += aik * b.at(k, j);
      }
    }
  }
  return out;
}

Matrix transposed(const Matrix& a) {
  Matrix out(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

}  // namespace nwsd
