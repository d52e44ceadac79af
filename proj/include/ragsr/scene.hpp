#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ragsr {

// Axis-aligned box in normalized image coordinates (fractions of width and
// height), with the detector's confidence.
struct BoundingBox {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
  double confidence = 0.0;

  bool is_zero() const { return x0 == 0.0 && y0 == 0.0 && x1 == 0.0 && y1 == 0.0; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct RegionAnnotation {
  BoundingBox box;
  std::string caption;
  int token_count = 0;

  // Padding sentinel: zero box, empty caption, no tokens.
  bool is_padding() const { return token_count == 0 && caption.empty() && box.is_zero(); }
  bool is_active() const { return token_count >= 1; }

  static RegionAnnotation padding() { return {}; }
  friend bool operator==(const RegionAnnotation&, const RegionAnnotation&) = default;
};

struct Scene {
  std::string source_id;
  int image_width = 1;
  int image_height = 1;
  std::string global_caption;
  std::vector<RegionAnnotation> regions;

  std::size_t active_count() const;
  friend bool operator==(const Scene&, const Scene&) = default;
};

// Throws Error(Invariant) naming the offending field and value.
void validate(const BoundingBox& box, std::string_view where);
void validate(const RegionAnnotation& region, std::string_view where);
void validate(const Scene& scene);

Scene load_scene(const std::filesystem::path& path);
void save_scene(const Scene& scene, const std::filesystem::path& path);

Scene parse_scene_json(std::string_view text, std::string_view origin = "<memory>");
std::string scene_to_json(const Scene& scene);

// Caller-declared token span length for a caption: whitespace-separated word
// count, at least 1 for a non-empty caption, capped at max_tokens.
int declared_token_count(std::string_view caption, int max_tokens = 77);

}  // namespace ragsr
