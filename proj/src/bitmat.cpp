#include "ragsr/bitmat.hpp"

#include <algorithm>

namespace ragsr {

BitMatrix BitMatrix::transposed() const {
  BitMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t.bits_[c * rows_ + r] = bits_[r * cols_ + c];
  return t;
}

bool BitMatrix::is_symmetric() const {
  if (rows_ != cols_) return false;
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = r + 1; c < cols_; ++c)
      if (bits_[r * cols_ + c] != bits_[c * cols_ + r]) return false;
  return true;
}

std::size_t BitMatrix::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool BitMatrix::row_any(std::size_t r) const {
  const auto* p = row(r);
  return std::any_of(p, p + cols_, [](std::uint8_t b) { return b != 0; });
}

}  // namespace ragsr
