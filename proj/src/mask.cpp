#include "ragsr/mask.hpp"

#include <fstream>

#include "ragsr/error.hpp"

namespace ragsr {
namespace {

constexpr const char* kModule = "mask_assembly";

std::string dims(const BitMatrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

std::vector<std::size_t> set_cells(const BitVector& v) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i]) idx.push_back(i);
  return idx;
}

}  // namespace

std::size_t TextLayout::span_of(std::size_t token) const {
  for (std::size_t t = 0; t < spans.size(); ++t)
    if (token >= spans[t].offset && token < spans[t].offset + spans[t].length) return t;
  throw Error(ErrorKind::Shape, kModule, "token " + std::to_string(token) + " outside every span");
}

void validate(const TextLayout& layout) {
  std::size_t next = 0;
  for (std::size_t t = 0; t < layout.spans.size(); ++t) {
    const auto& s = layout.spans[t];
    if (s.length < 1) throw Error(ErrorKind::Invariant, kModule, "span " + std::to_string(t) + " is empty");
    if (s.offset != next) {
      throw Error(ErrorKind::Invariant, kModule,
                  "span " + std::to_string(t) + " starts at " + std::to_string(s.offset) + ", expected " +
                      std::to_string(next));
    }
    next += s.length;
  }
  if (next != layout.total_tokens) {
    throw Error(ErrorKind::Invariant, kModule,
                "span lengths sum to " + std::to_string(next) + " but total_tokens = " +
                    std::to_string(layout.total_tokens));
  }
}

TextLayout layout_from_lengths(const std::vector<std::size_t>& lengths) {
  TextLayout layout;
  for (auto len : lengths) {
    layout.spans.push_back({layout.total_tokens, len});
    layout.total_tokens += len;
  }
  validate(layout);
  return layout;
}

TextLayout layout_for_slots(const PreparedRegions& prepared, const std::vector<std::size_t>& slots) {
  std::vector<std::size_t> lengths;
  lengths.reserve(slots.size());
  for (auto s : slots) {
    if (s >= prepared.active_count) {
      throw Error(ErrorKind::Invariant, kModule, "slot " + std::to_string(s) + " is not an active region");
    }
    lengths.push_back(static_cast<std::size_t>(prepared.slots[s].token_count));
  }
  return layout_from_lengths(lengths);
}

BitMatrix build_i2t(const RegionGridMasks& masks, const TextLayout& layout) {
  if (masks.region_masks.size() != layout.spans.size()) {
    throw Error(ErrorKind::Shape, kModule,
                "region count " + std::to_string(masks.region_masks.size()) + " != span count " +
                    std::to_string(layout.spans.size()));
  }
  const std::size_t cells = masks.grid.cells();
  BitMatrix i2t(cells, layout.total_tokens);
  for (std::size_t t = 0; t < masks.region_masks.size(); ++t) {
    const auto& region = masks.region_masks[t];
    if (region.size() != cells) throw Error(ErrorKind::Shape, kModule, "region mask length does not match grid");
    const auto& span = layout.spans[t];
    for (std::size_t i = 0; i < cells; ++i) {
      if (!region[i]) continue;
      for (std::size_t j = span.offset; j < span.offset + span.length; ++j) i2t.set(i, j);
    }
  }
  return i2t;
}

BitMatrix build_t2i(const BitMatrix& i2t) { return i2t.transposed(); }

BitMatrix build_i2i(const RegionGridMasks& masks) {
  const std::size_t cells = masks.grid.cells();
  if (masks.background.size() != cells) throw Error(ErrorKind::Shape, kModule, "background length does not match grid");
  BitMatrix i2i(cells, cells);
  auto connect = [&i2i](const std::vector<std::size_t>& members) {
    for (auto a : members)
      for (auto b : members) i2i.set(a, b);
  };
  for (const auto& region : masks.region_masks) connect(set_cells(region));
  connect(set_cells(masks.background));
  return i2i;
}

BitMatrix build_t2t(const TextLayout& layout) {
  validate(layout);
  BitMatrix t2t(layout.total_tokens, layout.total_tokens);
  for (const auto& span : layout.spans)
    for (std::size_t a = span.offset; a < span.offset + span.length; ++a)
      for (std::size_t b = span.offset; b < span.offset + span.length; ++b) t2t.set(a, b);
  return t2t;
}

RegionalMask assemble(BitMatrix t2t, BitMatrix t2i, BitMatrix i2t, BitMatrix i2i) {
  const std::size_t T = t2t.rows();
  const std::size_t I = i2i.rows();
  if (t2t.cols() != T) throw Error(ErrorKind::Shape, kModule, "t2t must be square, got " + dims(t2t));
  if (i2i.cols() != I) throw Error(ErrorKind::Shape, kModule, "i2i must be square, got " + dims(i2i));
  if (t2i.rows() != T || t2i.cols() != I) {
    throw Error(ErrorKind::Shape, kModule,
                "t2i is " + dims(t2i) + ", expected " + std::to_string(T) + "x" + std::to_string(I));
  }
  if (i2t.rows() != I || i2t.cols() != T) {
    throw Error(ErrorKind::Shape, kModule,
                "i2t is " + dims(i2t) + ", expected " + std::to_string(I) + "x" + std::to_string(T));
  }
  if (t2i != i2t.transposed()) {
    throw Error(ErrorKind::Invariant, kModule, "t2i (" + dims(t2i) + ") is not the transpose of i2t (" + dims(i2t) + ")");
  }

  BitMatrix joint(T + I, T + I);
  for (std::size_t r = 0; r < T; ++r) {
    for (std::size_t c = 0; c < T; ++c) joint.set(r, c, t2t(r, c));
    for (std::size_t c = 0; c < I; ++c) joint.set(r, T + c, t2i(r, c));
  }
  for (std::size_t r = 0; r < I; ++r) {
    for (std::size_t c = 0; c < T; ++c) joint.set(T + r, c, i2t(r, c));
    for (std::size_t c = 0; c < I; ++c) joint.set(T + r, T + c, i2i(r, c));
  }
  return RegionalMask{std::move(t2t), std::move(t2i), std::move(i2t), std::move(i2i), std::move(joint)};
}

RegionalMask build_regional_mask(const RegionGridMasks& masks, const TextLayout& layout) {
  BitMatrix i2t = build_i2t(masks, layout);
  BitMatrix t2i = build_t2i(i2t);
  return assemble(build_t2t(layout), std::move(t2i), std::move(i2t), build_i2i(masks));
}

BitMatrix with_global_prefix(const RegionalMask& mask, std::size_t global_tokens) {
  const std::size_t n = mask.joint.rows();
  const std::size_t g = global_tokens;
  BitMatrix out(g + n, g + n);
  for (std::size_t r = 0; r < g + n; ++r) {
    for (std::size_t c = 0; c < g + n; ++c) {
      const bool global = r < g || c < g;
      out.set(r, c, global || mask.joint(r - g, c - g));
    }
  }
  return out;
}

std::string format_rattn(const RegionalMask& mask) {
  const std::size_t n = mask.joint.rows();
  std::string out = "RATTN v1 " + std::to_string(mask.text_tokens()) + " " + std::to_string(mask.image_tokens()) + "\n";
  out.reserve(out.size() + n * (n + 1));
  for (std::size_t r = 0; r < n; ++r) {
    const auto* row = mask.joint.row(r);
    for (std::size_t c = 0; c < n; ++c) out.push_back(row[c] ? '1' : '0');
    out.push_back('\n');
  }
  return out;
}

void write_rattn(const RegionalMask& mask, const std::filesystem::path& path) {
  const std::string text = format_rattn(mask);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, kModule, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::Io, kModule, "write failed: " + path.string());
}

}  // namespace ragsr
