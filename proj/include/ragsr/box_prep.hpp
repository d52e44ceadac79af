#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ragsr/scene.hpp"

namespace ragsr {

struct PrepConfig {
  double confidence_threshold = 0.4;
  std::size_t max_regions = 5;
};

void validate(const PrepConfig& cfg);

struct PreparedRegions {
  // Always max_regions long: active slots first (descending confidence),
  // then padding slots.
  std::vector<RegionAnnotation> slots;
  std::size_t active_count = 0;

  std::span<const RegionAnnotation> active() const { return {slots.data(), active_count}; }
};

// Drops candidates below the threshold, stable-sorts the rest by descending
// confidence, keeps the first max_regions and pads the remainder.
// Padding candidates in the input are ignored.
PreparedRegions prepare(std::span<const RegionAnnotation> candidates, const PrepConfig& cfg = {});

// Scene whose regions are replaced by the prepared slots.
Scene preprocess(const Scene& scene, const PrepConfig& cfg = {});

}  // namespace ragsr
