#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace nap {

// Dense row-major matrix of doubles. The only dense container in the
// project; desk-scale graphs keep every N x N intermediate affordable.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  std::size_t size() const { return data.size(); }

  static Matrix zeros(int r, int c) { return Matrix(r, c); }
  static Matrix ones(int r, int c);
  static Matrix identity(int n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
};

bool all_finite(const Matrix& m);

// Plain (non-recorded) helpers for oracles, metrics and the probe.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transposed(const Matrix& m);
double frobenius_norm(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace nap
