#pragma once

#include <cstddef>
#include <vector>

namespace ragsr {

// Dense row-major f64 matrix. Products accumulate left to right so results
// are reproducible bit for bit.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;
  Matrix transposed() const;
  // Columns [first, first + count).
  Matrix col_block(std::size_t first, std::size_t count) const;
  // Rows [first, first + count).
  Matrix row_block(std::size_t first, std::size_t count) const;
  void set_col_block(std::size_t first, const Matrix& block);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
// Rows of `top` followed by rows of `bottom`.
Matrix vstack(const Matrix& top, const Matrix& bottom);
double max_abs_diff(const Matrix& a, const Matrix& b);
double max_abs(const Matrix& a);

}  // namespace ragsr
