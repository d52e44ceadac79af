#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ragsr/bitmat.hpp"
#include "ragsr/box_prep.hpp"
#include "ragsr/scene.hpp"

namespace ragsr {

struct GridSpec {
  int height = 1;
  int width = 1;
  int level_id = 0;

  std::size_t cells() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// Square grid labelled by its side length, as used by the CLI `--levels`.
GridSpec square_grid(int side);

enum class CoverageRule {
  Center,   // cell set iff its center lies in the closed box
  Overlap,  // cell set iff the open cell interior intersects the box with positive area
};

CoverageRule parse_coverage_rule(const std::string& name);
const char* to_string(CoverageRule rule);

struct DroppedRegion {
  int level_id = 0;
  std::size_t slot = 0;
  std::string caption;
};

struct RegionGridMasks {
  GridSpec grid;
  std::vector<BitVector> region_masks;  // one per surviving region
  std::vector<std::size_t> slots;       // prepared-slot index of each surviving region
  BitVector background;
};

// Row-major flattening: index = r * width + c.
BitVector rasterize_box(const BoundingBox& box, const GridSpec& grid, CoverageRule rule = CoverageRule::Center);

// Complement of the union of all region masks.
BitVector background_mask(std::span<const BitVector> region_masks, const GridSpec& grid);

// Rasterizes every active slot independently at each level. Regions empty at a
// level are omitted from that level and appended to `drop_log` if given.
std::map<int, RegionGridMasks> rasterize_scene(const PreparedRegions& prepared, std::span<const GridSpec> grids,
                                               CoverageRule rule = CoverageRule::Center,
                                               std::vector<DroppedRegion>* drop_log = nullptr);

RegionGridMasks rasterize_level(const PreparedRegions& prepared, const GridSpec& grid, CoverageRule rule,
                                std::vector<DroppedRegion>* drop_log = nullptr);

// Reshape helpers; unflatten(flatten(m)) == m.
BitMatrix unflatten(const BitVector& flat, const GridSpec& grid);
BitVector flatten(const BitMatrix& m);

// "RMASK v1 <h> <w> <n>" then one '0'/'1' line per region mask and the background last.
std::string format_rmask(const RegionGridMasks& masks);
void write_rmask(const RegionGridMasks& masks, const std::filesystem::path& path);

// Binary PGM (P5), 255 for set cells.
void write_mask_pgm(const BitMatrix& mask, const std::filesystem::path& path);

}  // namespace ragsr
