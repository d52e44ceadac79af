#include "ragsr/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "ragsr/error.hpp"

namespace ragsr {
namespace {

std::string dims(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw Error(ErrorKind::Shape, "matrix", "data length does not match shape");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::col_block(std::size_t first, std::size_t count) const {
  if (first + count > cols_) throw Error(ErrorKind::Shape, "matrix", "column block out of range");
  Matrix out(rows_, count);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = (*this)(r, first + c);
  return out;
}

Matrix Matrix::row_block(std::size_t first, std::size_t count) const {
  if (first + count > rows_) throw Error(ErrorKind::Shape, "matrix", "row block out of range");
  Matrix out(count, cols_);
  std::copy(row(first), row(first) + count * cols_, out.data_.begin());
  return out;
}

void Matrix::set_col_block(std::size_t first, const Matrix& block) {
  if (block.rows() != rows_ || first + block.cols() > cols_) {
    throw Error(ErrorKind::Shape, "matrix", "column block " + dims(block) + " does not fit " + dims(*this));
  }
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < block.cols(); ++c) (*this)(r, first + c) = block(r, c);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorKind::Shape, "matrix", "cannot multiply " + dims(a) + " by " + dims(b));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::Shape, "matrix", "cannot add " + dims(a) + " and " + dims(b));
  }
  Matrix out = a;
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  if (top.rows() == 0) return bottom;
  if (bottom.rows() == 0) return top;
  if (top.cols() != bottom.cols()) {
    throw Error(ErrorKind::Shape, "matrix", "cannot stack " + dims(top) + " over " + dims(bottom));
  }
  std::vector<double> data = top.data();
  data.insert(data.end(), bottom.data().begin(), bottom.data().end());
  return Matrix(top.rows() + bottom.rows(), top.cols(), std::move(data));
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::Shape, "matrix", "cannot compare " + dims(a) + " and " + dims(b));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace ragsr
