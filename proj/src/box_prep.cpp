#include "ragsr/box_prep.hpp"

#include <algorithm>
#include <cmath>

#include "ragsr/error.hpp"

namespace ragsr {

void validate(const PrepConfig& cfg) {
  if (!(cfg.confidence_threshold >= 0.0 && cfg.confidence_threshold <= 1.0)) {
    throw Error(ErrorKind::Config, "box_prep", "confidence_threshold must lie in [0,1]");
  }
  if (cfg.max_regions < 1) throw Error(ErrorKind::Config, "box_prep", "max_regions must be >= 1");
}

PreparedRegions prepare(std::span<const RegionAnnotation> candidates, const PrepConfig& cfg) {
  validate(cfg);
  std::vector<RegionAnnotation> kept;
  kept.reserve(candidates.size());
  for (const auto& c : candidates) {
    if (c.is_padding()) continue;
    if (c.box.confidence < cfg.confidence_threshold) continue;
    kept.push_back(c);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const RegionAnnotation& a, const RegionAnnotation& b) {
    return a.box.confidence > b.box.confidence;
  });
  if (kept.size() > cfg.max_regions) kept.resize(cfg.max_regions);

  PreparedRegions out;
  out.active_count = kept.size();
  out.slots = std::move(kept);
  out.slots.resize(cfg.max_regions, RegionAnnotation::padding());
  return out;
}

Scene preprocess(const Scene& scene, const PrepConfig& cfg) {
  Scene out = scene;
  out.regions = prepare(scene.regions, cfg).slots;
  return out;
}

}  // namespace ragsr
