#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ragsr/attention.hpp"
#include "ragsr/box_prep.hpp"
#include "ragsr/raster.hpp"
#include "ragsr/scene.hpp"

namespace ragsr {

struct LoopConfig {
  int total_steps = 50;
  int injection_steps = 50;  // regional refinement runs on steps [0, injection_steps)
  GridSpec grid = square_grid(16);
  CoverageRule rule = CoverageRule::Center;
  PrepConfig prep;
  std::uint64_t seed = 0;
  bool regional_enabled = true;
  // Append global-caption tokens (fully connected) to the regional stage.
  bool include_global_tokens = false;
  std::size_t model_dim = 8;
  std::size_t heads = 2;
};

void validate(const LoopConfig& cfg);

struct StepRecord {
  int index = 0;
  bool regional_applied = false;
  double mean = 0.0;
  double variance = 0.0;
  double l2_norm = 0.0;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

using StepTrace = std::vector<StepRecord>;

struct StageWeights {
  BlockWeights global;
  BlockWeights regional;

  static StageWeights init(std::size_t model_dim, std::size_t heads, std::uint64_t seed);
};

struct LoopResult {
  StepTrace trace;
  Matrix latent;                  // I x model_dim
  std::size_t region_count = 0;   // regions surviving at the loop grid
  std::size_t text_tokens = 0;
};

// Toy fixed-schedule denoising loop. Each step runs the global stage, then
// the regional block when the step is gated in and the grid has at least one
// region, and mixes the prediction into the latent:
//   x <- a_s x + (1 - a_s) prediction,  a_s = 1 - (s + 1) / (2 total_steps)
LoopResult run_loop(const Scene& scene, const LoopConfig& cfg, const StageWeights& weights);

// Deterministic caption embeddings derived from (seed, caption, slot).
Matrix caption_embedding(std::string_view caption, std::size_t tokens, std::size_t model_dim, std::uint64_t seed,
                         std::uint64_t stream);

struct BuildConfig {
  std::vector<int> levels{64, 32, 16, 8};
  CoverageRule rule = CoverageRule::Center;
  PrepConfig prep;
  bool with_timings = false;  // timings make the report non-reproducible
};

struct LevelSummary {
  GridSpec grid;
  std::vector<std::size_t> slots;
  std::size_t text_tokens = 0;
  std::size_t image_tokens = 0;
};

struct BuildReport {
  std::string source_id;
  std::size_t active_count = 0;
  std::vector<LevelSummary> levels;
  std::vector<DroppedRegion> drop_log;
  std::vector<std::string> files;
  std::string json;
};

// Writes per level: level_<n>.rmask, level_<n>.rattn, level_<n>_joint.pgm,
// level_<n>_region<k>.pgm, level_<n>_background.pgm; plus report.json.
BuildReport build_all(const std::filesystem::path& scene_path, const BuildConfig& cfg,
                      const std::filesystem::path& out_dir);

// Runs the loop with seeded weights and writes trace.json and latent.txt
// (hex-float text, bit exact).
LoopResult simulate(const std::filesystem::path& scene_path, const LoopConfig& cfg,
                    const std::filesystem::path& out_dir);

std::string trace_to_json(const StepTrace& trace);
std::string latent_to_text(const Matrix& latent);

}  // namespace ragsr
