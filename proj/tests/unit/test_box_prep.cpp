#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ragsr/box_prep.hpp"
#include "ragsr/error.hpp"

using namespace ragsr;

namespace {

RegionAnnotation cand(double conf, std::string caption = "c") {
  return {{0.1, 0.1, 0.5, 0.5, conf}, std::move(caption), 2};
}

std::vector<RegionAnnotation> random_candidates(oracle::Gen& g) {
  std::vector<RegionAnnotation> out;
  const int n = g.integer(0, 12);
  for (int i = 0; i < n; ++i) {
    double conf = g.unit();
    const int pick = g.integer(0, 9);
    if (pick == 0) conf = 0.4;
    if (pick == 1 && !out.empty()) conf = out.back().box.confidence;
    out.push_back(cand(conf, "cand" + std::to_string(i)));
  }
  return out;
}

}  // namespace

TEST(BoxPrep, FiltersAndSorts) {
  const std::vector<RegionAnnotation> in{cand(0.9, "a"), cand(0.35, "b"), cand(0.55, "c")};
  const PreparedRegions out = prepare(in);
  ASSERT_EQ(out.slots.size(), 5u);
  ASSERT_EQ(out.active_count, 2u);
  EXPECT_EQ(out.slots[0].caption, "a");
  EXPECT_EQ(out.slots[1].caption, "c");
  EXPECT_DOUBLE_EQ(out.slots[0].box.confidence, 0.9);
  EXPECT_DOUBLE_EQ(out.slots[1].box.confidence, 0.55);
  for (std::size_t i = 2; i < 5; ++i) {
    EXPECT_TRUE(out.slots[i].box.is_zero());
    EXPECT_TRUE(out.slots[i].caption.empty());
    EXPECT_EQ(out.slots[i].token_count, 0);
  }
}

TEST(BoxPrep, TakesTopFive) {
  std::vector<RegionAnnotation> in;
  const double confs[] = {0.5, 0.95, 0.41, 0.7, 0.8, 0.45, 0.6};
  for (double c : confs) in.push_back(cand(c));
  const PreparedRegions out = prepare(in);
  ASSERT_EQ(out.active_count, 5u);
  const double expected[] = {0.95, 0.8, 0.7, 0.6, 0.5};
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(out.slots[i].box.confidence, expected[i]);
}

TEST(BoxPrep, EmptyInput) {
  const PreparedRegions out = prepare(std::vector<RegionAnnotation>{});
  EXPECT_EQ(out.active_count, 0u);
  ASSERT_EQ(out.slots.size(), 5u);
  for (const auto& s : out.slots) EXPECT_TRUE(s.is_padding());
}

TEST(BoxPrep, ThresholdIsInclusiveAndTiesKeepInputOrder) {
  const std::vector<RegionAnnotation> in{cand(0.4, "first"), cand(0.3999999, "below"), cand(0.4, "second")};
  const PreparedRegions out = prepare(in);
  ASSERT_EQ(out.active_count, 2u);
  EXPECT_EQ(out.slots[0].caption, "first");
  EXPECT_EQ(out.slots[1].caption, "second");
}

TEST(BoxPrep, RejectsBadConfig) {
  EXPECT_THROW(prepare(std::vector<RegionAnnotation>{}, PrepConfig{1.5, 5}), Error);
  EXPECT_THROW(prepare(std::vector<RegionAnnotation>{}, PrepConfig{0.4, 0}), Error);
}

TEST(BoxPrepProperty, MatchesRestatedRuleOnRandomLists) {
  oracle::Gen g(77);
  for (int n = 0; n < 1000; ++n) {
    const auto in = random_candidates(g);
    const PreparedRegions out = prepare(in);
    ASSERT_EQ(out.slots.size(), 5u);
    const auto expected = oracle::expected_active(in, 0.4, 5);
    ASSERT_EQ(out.active_count, expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) ASSERT_EQ(out.slots[i], expected[i]) << "list " << n;
    for (std::size_t i = 1; i < out.active_count; ++i)
      ASSERT_GE(out.slots[i - 1].box.confidence, out.slots[i].box.confidence);

    // Idempotent on its own active output.
    const std::vector<RegionAnnotation> active(out.active().begin(), out.active().end());
    const PreparedRegions again = prepare(active);
    ASSERT_EQ(again.slots, out.slots);
  }
}
