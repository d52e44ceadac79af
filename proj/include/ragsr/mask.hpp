#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "ragsr/bitmat.hpp"
#include "ragsr/box_prep.hpp"
#include "ragsr/raster.hpp"

namespace ragsr {

struct TokenSpan {
  std::size_t offset = 0;
  std::size_t length = 0;
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

// Caption token spans of the surviving regions, concatenated in slot order.
struct TextLayout {
  std::vector<TokenSpan> spans;
  std::size_t total_tokens = 0;

  // Span index owning token j; layout must be valid.
  std::size_t span_of(std::size_t token) const;
};

void validate(const TextLayout& layout);

// Builds contiguous spans from the token counts of `slots` (indices into
// prepared.slots), in the given order.
TextLayout layout_for_slots(const PreparedRegions& prepared, const std::vector<std::size_t>& slots);
TextLayout layout_from_lengths(const std::vector<std::size_t>& lengths);

// Joint (text + image) attention mask, text tokens first:
//   [ t2t  t2i ]
//   [ i2t  i2i ]
struct RegionalMask {
  BitMatrix t2t;    // T x T
  BitMatrix t2i;    // T x I
  BitMatrix i2t;    // I x T
  BitMatrix i2i;    // I x I
  BitMatrix joint;  // (T + I) x (T + I)

  std::size_t text_tokens() const { return t2t.rows(); }
  std::size_t image_tokens() const { return i2i.rows(); }
};

// Image cell i may attend to token j iff some region t contains i and j lies
// in span t. Background rows are empty.
BitMatrix build_i2t(const RegionGridMasks& masks, const TextLayout& layout);
BitMatrix build_t2i(const BitMatrix& i2t);
// Cells attend to cells sharing a region; background attends to background.
BitMatrix build_i2i(const RegionGridMasks& masks);
// Block diagonal over spans.
BitMatrix build_t2t(const TextLayout& layout);

// Checks dimensions and t2i == i2t^T, then composes the joint matrix.
RegionalMask assemble(BitMatrix t2t, BitMatrix t2i, BitMatrix i2t, BitMatrix i2i);

// All four blocks for one level.
RegionalMask build_regional_mask(const RegionGridMasks& masks, const TextLayout& layout);

// Joint mask with `global_tokens` fully connected tokens placed before the
// regional text. Used only when global-caption tokens join the regional stage.
BitMatrix with_global_prefix(const RegionalMask& mask, std::size_t global_tokens);

// "RATTN v1 <T> <I>" then T + I lines of '0'/'1'.
std::string format_rattn(const RegionalMask& mask);
void write_rattn(const RegionalMask& mask, const std::filesystem::path& path);

}  // namespace ragsr
