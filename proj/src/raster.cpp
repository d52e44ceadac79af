#include "ragsr/raster.hpp"

#include <fstream>

#include "ragsr/error.hpp"

namespace ragsr {
namespace {

constexpr const char* kModule = "region_raster";

void check_grid(const GridSpec& grid) {
  if (grid.height < 1 || grid.width < 1) {
    throw Error(ErrorKind::Config, kModule,
                "grid " + std::to_string(grid.height) + "x" + std::to_string(grid.width) + " must be at least 1x1");
  }
}

bool any_set(const BitVector& v) {
  for (auto b : v)
    if (b) return true;
  return false;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, kModule, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, kModule, "write failed: " + path.string());
}

}  // namespace

GridSpec square_grid(int side) { return GridSpec{side, side, side}; }

CoverageRule parse_coverage_rule(const std::string& name) {
  if (name == "center") return CoverageRule::Center;
  if (name == "overlap") return CoverageRule::Overlap;
  throw Error(ErrorKind::Config, kModule, "unknown coverage rule '" + name + "' (expected center|overlap)");
}

const char* to_string(CoverageRule rule) { return rule == CoverageRule::Center ? "center" : "overlap"; }

BitVector rasterize_box(const BoundingBox& box, const GridSpec& grid, CoverageRule rule) {
  check_grid(grid);
  BitVector out(grid.cells(), 0);
  const double w = grid.width;
  const double h = grid.height;
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) {
      bool inside = false;
      if (rule == CoverageRule::Center) {
        const double cx = (c + 0.5) / w;
        const double cy = (r + 0.5) / h;
        inside = cx >= box.x0 && cx <= box.x1 && cy >= box.y0 && cy <= box.y1;
      } else {
        inside = c / w < box.x1 && (c + 1) / w > box.x0 && r / h < box.y1 && (r + 1) / h > box.y0;
      }
      if (inside) out[static_cast<std::size_t>(r) * grid.width + c] = 1;
    }
  }
  return out;
}

BitVector background_mask(std::span<const BitVector> region_masks, const GridSpec& grid) {
  check_grid(grid);
  const std::size_t n = grid.cells();
  BitVector bg(n, 1);
  for (std::size_t t = 0; t < region_masks.size(); ++t) {
    if (region_masks[t].size() != n) {
      throw Error(ErrorKind::Shape, kModule,
                  "region mask " + std::to_string(t) + " has length " + std::to_string(region_masks[t].size()) +
                      ", grid has " + std::to_string(n) + " cells");
    }
    for (std::size_t i = 0; i < n; ++i)
      if (region_masks[t][i]) bg[i] = 0;
  }
  return bg;
}

RegionGridMasks rasterize_level(const PreparedRegions& prepared, const GridSpec& grid, CoverageRule rule,
                                std::vector<DroppedRegion>* drop_log) {
  RegionGridMasks out;
  out.grid = grid;
  for (std::size_t slot = 0; slot < prepared.active_count; ++slot) {
    const auto& region = prepared.slots[slot];
    BitVector mask = rasterize_box(region.box, grid, rule);
    if (!any_set(mask)) {
      if (drop_log) drop_log->push_back({grid.level_id, slot, region.caption});
      continue;
    }
    out.region_masks.push_back(std::move(mask));
    out.slots.push_back(slot);
  }
  out.background = background_mask(out.region_masks, grid);
  return out;
}

std::map<int, RegionGridMasks> rasterize_scene(const PreparedRegions& prepared, std::span<const GridSpec> grids,
                                               CoverageRule rule, std::vector<DroppedRegion>* drop_log) {
  std::map<int, RegionGridMasks> levels;
  for (const auto& grid : grids) {
    if (levels.contains(grid.level_id)) {
      throw Error(ErrorKind::Config, kModule, "duplicate level id " + std::to_string(grid.level_id));
    }
    levels.emplace(grid.level_id, rasterize_level(prepared, grid, rule, drop_log));
  }
  return levels;
}

BitMatrix unflatten(const BitVector& flat, const GridSpec& grid) {
  if (flat.size() != grid.cells()) throw Error(ErrorKind::Shape, kModule, "flattened mask length does not match grid");
  BitMatrix m(static_cast<std::size_t>(grid.height), static_cast<std::size_t>(grid.width));
  for (int r = 0; r < grid.height; ++r)
    for (int c = 0; c < grid.width; ++c) m.set(r, c, flat[static_cast<std::size_t>(r) * grid.width + c] != 0);
  return m;
}

BitVector flatten(const BitMatrix& m) {
  BitVector v(m.rows() * m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) v[r * m.cols() + c] = m(r, c) ? 1 : 0;
  return v;
}

std::string format_rmask(const RegionGridMasks& masks) {
  std::string out = "RMASK v1 " + std::to_string(masks.grid.height) + " " + std::to_string(masks.grid.width) + " " +
                    std::to_string(masks.region_masks.size()) + "\n";
  out.reserve(out.size() + (masks.region_masks.size() + 1) * (masks.grid.cells() + 1));
  auto emit = [&out](const BitVector& v) {
    for (auto b : v) out.push_back(b ? '1' : '0');
    out.push_back('\n');
  };
  for (const auto& m : masks.region_masks) emit(m);
  emit(masks.background);
  return out;
}

void write_rmask(const RegionGridMasks& masks, const std::filesystem::path& path) {
  write_file(path, format_rmask(masks));
}

void write_mask_pgm(const BitMatrix& mask, const std::filesystem::path& path) {
  std::string bytes = "P5\n" + std::to_string(mask.cols()) + " " + std::to_string(mask.rows()) + "\n255\n";
  bytes.reserve(bytes.size() + mask.data().size());
  for (auto b : mask.data()) bytes.push_back(static_cast<char>(b ? 255 : 0));
  write_file(path, bytes);
}

}  // namespace ragsr
