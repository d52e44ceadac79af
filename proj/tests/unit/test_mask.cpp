#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ragsr/error.hpp"
#include "ragsr/mask.hpp"

using namespace ragsr;

namespace {

RegionGridMasks grid_masks(GridSpec grid, std::vector<BitVector> regions) {
  RegionGridMasks m;
  m.grid = grid;
  for (std::size_t t = 0; t < regions.size(); ++t) m.slots.push_back(t);
  m.region_masks = std::move(regions);
  m.background = background_mask(m.region_masks, grid);
  return m;
}

BitMatrix from_rows(const std::vector<std::vector<int>>& rows) {
  BitMatrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m.set(r, c, rows[r][c] != 0);
  return m;
}

const GridSpec k2x2{2, 2, 2};

}  // namespace

TEST(BuildI2t, SingleCellRegion) {
  const auto masks = grid_masks(k2x2, {{1, 0, 0, 0}});
  const BitMatrix i2t = build_i2t(masks, layout_from_lengths({2}));
  EXPECT_EQ(i2t, from_rows({{1, 1}, {0, 0}, {0, 0}, {0, 0}}));
}

TEST(BuildI2t, ZeroRegions) {
  const auto masks = grid_masks(k2x2, {});
  const BitMatrix i2t = build_i2t(masks, layout_from_lengths({}));
  EXPECT_EQ(i2t.rows(), 4u);
  EXPECT_EQ(i2t.cols(), 0u);
}

TEST(BuildI2t, SharedCellSeesBothSpans) {
  const auto masks = grid_masks(k2x2, {{1, 1, 0, 0}, {0, 1, 1, 0}});
  const BitMatrix i2t = build_i2t(masks, layout_from_lengths({2, 1}));
  EXPECT_EQ(i2t, from_rows({{1, 1, 0}, {1, 1, 1}, {0, 0, 1}, {0, 0, 0}}));
}

TEST(BuildI2t, CountMismatch) {
  const auto masks = grid_masks(k2x2, {{1, 0, 0, 0}});
  EXPECT_THROW(build_i2t(masks, layout_from_lengths({1, 1})), Error);
}

TEST(BuildT2i, Transpose) {
  const BitMatrix i2t = from_rows({{1, 1}, {0, 0}, {0, 0}, {0, 0}});
  EXPECT_EQ(build_t2i(i2t), from_rows({{1, 0, 0, 0}, {1, 0, 0, 0}}));
  EXPECT_EQ(build_t2i(build_t2i(i2t)), i2t);
  EXPECT_TRUE(build_t2i(BitMatrix{}).empty());
}

TEST(BuildI2i, SingleCellRegion) {
  const auto masks = grid_masks(k2x2, {{1, 0, 0, 0}});
  EXPECT_EQ(build_i2i(masks), from_rows({{1, 0, 0, 0}, {0, 1, 1, 1}, {0, 1, 1, 1}, {0, 1, 1, 1}}));
}

TEST(BuildI2i, ZeroRegionsIsAllOnes) {
  EXPECT_EQ(build_i2i(grid_masks(k2x2, {})), BitMatrix(4, 4, true));
}

TEST(BuildI2i, OverlappingRegionsBinarized) {
  const auto masks = grid_masks(GridSpec{1, 4, 4}, {{1, 1, 0, 0}, {0, 1, 1, 0}});
  const BitMatrix i2i = build_i2i(masks);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(i2i(1, c), c < 3) << c;
  EXPECT_EQ(i2i, from_rows({{1, 1, 0, 0}, {1, 1, 1, 0}, {0, 1, 1, 0}, {0, 0, 0, 1}}));
}

TEST(BuildT2t, BlockDiagonal) {
  EXPECT_EQ(build_t2t(layout_from_lengths({2, 1})), from_rows({{1, 1, 0}, {1, 1, 0}, {0, 0, 1}}));
  EXPECT_EQ(build_t2t(layout_from_lengths({4})), BitMatrix(4, 4, true));
  EXPECT_TRUE(build_t2t(layout_from_lengths({})).empty());
}

TEST(TextLayout, Validation) {
  EXPECT_THROW(layout_from_lengths({2, 0}), Error);
  TextLayout gap{{{0, 2}, {3, 1}}, 4};
  EXPECT_THROW(validate(gap), Error);
  TextLayout short_total{{{0, 2}}, 3};
  EXPECT_THROW(validate(short_total), Error);
  EXPECT_EQ(layout_from_lengths({2, 3}).span_of(4), 1u);
}

TEST(Assemble, SixBySixJoint) {
  const auto masks = grid_masks(k2x2, {{1, 0, 0, 0}});
  const RegionalMask m = build_regional_mask(masks, layout_from_lengths({2}));
  EXPECT_EQ(m.joint, from_rows({{1, 1, 1, 0, 0, 0},
                                {1, 1, 1, 0, 0, 0},
                                {1, 1, 1, 0, 0, 0},
                                {0, 0, 0, 1, 1, 1},
                                {0, 0, 0, 1, 1, 1},
                                {0, 0, 0, 1, 1, 1}}));
  for (std::size_t d = 0; d < 6; ++d) EXPECT_TRUE(m.joint(d, d));
  EXPECT_EQ(format_rattn(m), "RATTN v1 2 4\n111000\n111000\n111000\n000111\n000111\n000111\n");
}

TEST(Assemble, ZeroRegionsDegeneratesToI2i) {
  const RegionalMask m = build_regional_mask(grid_masks(k2x2, {}), layout_from_lengths({}));
  EXPECT_EQ(m.text_tokens(), 0u);
  EXPECT_EQ(m.joint, BitMatrix(4, 4, true));
}

TEST(Assemble, RejectsInconsistentBlocks) {
  const BitMatrix t2t(2, 2, true), i2i(4, 4, true);
  const BitMatrix i2t = from_rows({{1, 1}, {0, 0}, {0, 0}, {0, 0}});
  try {
    assemble(t2t, BitMatrix(2, 3), i2t, i2i);
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("2x4"), std::string::npos) << msg;
  }
  EXPECT_THROW(assemble(t2t, BitMatrix(2, 4), i2t, i2i), Error);  // not the transpose
}

TEST(GlobalPrefix, FullyConnected) {
  const RegionalMask m = build_regional_mask(grid_masks(k2x2, {{1, 0, 0, 0}}), layout_from_lengths({2}));
  const BitMatrix ext = with_global_prefix(m, 3);
  ASSERT_EQ(ext.rows(), 9u);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_TRUE(ext(0, i));
    EXPECT_TRUE(ext(i, 2));
  }
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 6; ++c) EXPECT_EQ(ext(r + 3, c + 3), m.joint(r, c));
}

// Entrywise comparison with the brute-force predicate on random scenes.
TEST(MaskProperty, MatchesPredicateAndSymmetries) {
  oracle::Gen g(31);
  for (int n = 0; n < 300; ++n) {
    const int h = g.integer(1, 16), w = g.integer(1, 16);
    std::vector<oracle::Box> boxes;
    std::vector<int> tokens;
    std::vector<RegionAnnotation> cands;
    for (int t = 0, k = g.integer(0, 5); t < k; ++t) {
      double a = g.unit(), b = g.unit(), c = g.unit(), d = g.unit();
      oracle::Box box{std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)};
      const int tok = g.integer(1, 8);
      boxes.push_back(box);
      tokens.push_back(tok);
      // Strictly decreasing confidences keep slot order equal to list order.
      cands.push_back({{box.x0, box.y0, box.x1, box.y1, 0.95 - 0.1 * t}, "r", tok});
    }
    const PreparedRegions prepared = prepare(cands);
    const GridSpec grid{h, w, 0};
    const RegionGridMasks masks = rasterize_level(prepared, grid, CoverageRule::Center);
    const RegionalMask m = build_regional_mask(masks, layout_for_slots(prepared, masks.slots));
    const oracle::MaskPredicate pred(boxes, tokens, h, w);

    const int N = pred.text() + pred.image();
    ASSERT_EQ(static_cast<int>(m.joint.rows()), N);
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b) ASSERT_EQ(m.joint(a, b), pred(a, b)) << "scene " << n << " (" << a << "," << b << ")";
    ASSERT_EQ(m.t2i, m.i2t.transposed());
    ASSERT_TRUE(m.i2i.is_symmetric());
    ASSERT_TRUE(m.t2t.is_symmetric());
  }
}

TEST(MaskProperty, RemovingRegionGrowsBackground) {
  oracle::Gen g(32);
  for (int n = 0; n < 200; ++n) {
    std::vector<RegionAnnotation> cands;
    for (int t = 0, k = g.integer(1, 5); t < k; ++t) {
      double a = g.unit(), b = g.unit(), c = g.unit(), d = g.unit();
      cands.push_back({{std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d), 0.9 - 0.1 * t}, "r", 2});
    }
    const GridSpec grid{10, 10, 0};
    const PreparedRegions full = prepare(cands);
    const auto drop = static_cast<std::size_t>(g.integer(0, static_cast<int>(cands.size()) - 1));
    std::vector<RegionAnnotation> fewer = cands;
    fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(drop));
    const PreparedRegions reduced = prepare(fewer);

    const auto a = rasterize_level(full, grid, CoverageRule::Center);
    const auto b = rasterize_level(reduced, grid, CoverageRule::Center);
    for (std::size_t i = 0; i < grid.cells(); ++i)
      if (a.background[i]) ASSERT_TRUE(b.background[i]);

    // Image rows of i2t can only lose entries: compare per cell whether any token is visible.
    const auto ma = build_regional_mask(a, layout_for_slots(full, a.slots));
    const auto mb = build_regional_mask(b, layout_for_slots(reduced, b.slots));
    for (std::size_t i = 0; i < grid.cells(); ++i) {
      std::size_t ca = 0, cb = 0;
      for (std::size_t j = 0; j < ma.i2t.cols(); ++j) ca += ma.i2t(i, j);
      for (std::size_t j = 0; j < mb.i2t.cols(); ++j) cb += mb.i2t(i, j);
      ASSERT_LE(cb, ca);
    }
  }
}
