#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ragsr {

using BitVector = std::vector<std::uint8_t>;  // one byte per cell, values 0/1

// Dense row-major binary matrix.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols, bool fill = false)
      : rows_(rows), cols_(cols), bits_(rows * cols, fill ? 1 : 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return bits_.empty(); }

  bool operator()(std::size_t r, std::size_t c) const { return bits_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v = true) { bits_[r * cols_ + c] = v ? 1 : 0; }

  const std::uint8_t* row(std::size_t r) const { return bits_.data() + r * cols_; }
  const std::vector<std::uint8_t>& data() const { return bits_; }

  BitMatrix transposed() const;
  bool is_symmetric() const;
  std::size_t count() const;
  bool row_any(std::size_t r) const;

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace ragsr
