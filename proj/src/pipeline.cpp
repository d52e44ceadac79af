#include "ragsr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <charconv>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "ragsr/error.hpp"
#include "ragsr/mask.hpp"
#include "ragsr/rng.hpp"

namespace ragsr {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kModule = "pipeline";

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, kModule, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::Io, kModule, "write failed: " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, kModule, "cannot create " + dir.string() + ": " + ec.message());
}

std::string hex(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
  return std::string(buf, end);
}

StepRecord summarize(int index, bool regional, const Matrix& latent) {
  const auto& d = latent.data();
  const double n = static_cast<double>(d.size());
  double sum = 0.0, sq = 0.0;
  for (double v : d) {
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  double var = 0.0;
  for (double v : d) var += (v - mean) * (v - mean);
  return {index, regional, mean, var / n, std::sqrt(sq)};
}

// Regional text for the loop grid: kept spans' embeddings stacked in slot order.
Matrix regional_text(const PreparedRegions& prepared, const RegionGridMasks& masks, std::size_t model_dim,
                     std::uint64_t seed) {
  Matrix text(0, model_dim);
  for (auto slot : masks.slots) {
    const auto& region = prepared.slots[slot];
    text = vstack(text, caption_embedding(region.caption, static_cast<std::size_t>(region.token_count), model_dim,
                                          seed, 1000 + slot));
  }
  return text;
}

std::string level_name(const GridSpec& g) {
  return g.height == g.width ? "level_" + std::to_string(g.level_id)
                             : "level_" + std::to_string(g.height) + "x" + std::to_string(g.width);
}

}  // namespace

void validate(const LoopConfig& cfg) {
  if (cfg.total_steps < 1) throw Error(ErrorKind::Config, kModule, "total_steps must be >= 1");
  if (cfg.injection_steps < 0 || cfg.injection_steps > cfg.total_steps) {
    throw Error(ErrorKind::Config, kModule,
                "injection steps K = " + std::to_string(cfg.injection_steps) + " must lie in [0, " +
                    std::to_string(cfg.total_steps) + "]");
  }
  if (cfg.grid.height < 1 || cfg.grid.width < 1) throw Error(ErrorKind::Config, kModule, "grid must be at least 1x1");
  if (cfg.model_dim == 0 || cfg.heads == 0 || cfg.model_dim % cfg.heads != 0) {
    throw Error(ErrorKind::Config, kModule, "model_dim must be a positive multiple of heads");
  }
}

StageWeights StageWeights::init(std::size_t model_dim, std::size_t heads, std::uint64_t seed) {
  return {init_block_weights(model_dim, heads, mix_seed(seed, 2), 0.5),
          init_block_weights(model_dim, heads, mix_seed(seed, 3), 0.5)};
}

Matrix caption_embedding(std::string_view caption, std::size_t tokens, std::size_t model_dim, std::uint64_t seed,
                         std::uint64_t stream) {
  Rng rng(mix_seed(seed ^ fnv1a64(caption), stream));
  Matrix m(tokens, model_dim);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

LoopResult run_loop(const Scene& scene, const LoopConfig& cfg, const StageWeights& weights) {
  validate(cfg);
  const PreparedRegions prepared = prepare(scene.regions, cfg.prep);
  const RegionGridMasks masks = rasterize_level(prepared, cfg.grid, cfg.rule);
  const TextLayout layout = layout_for_slots(prepared, masks.slots);
  const RegionalMask mask = build_regional_mask(masks, layout);

  const std::size_t d = cfg.model_dim;
  const std::size_t global_tokens = static_cast<std::size_t>(declared_token_count(scene.global_caption));
  const Matrix global_hidden = caption_embedding(scene.global_caption, global_tokens, d, cfg.seed, 999);
  Matrix text_hidden = regional_text(prepared, masks, d, cfg.seed);
  BitMatrix joint = mask.joint;
  if (cfg.include_global_tokens && global_tokens > 0) {
    text_hidden = vstack(global_hidden, text_hidden);
    joint = with_global_prefix(mask, global_tokens);
  }
  // Without regions the joint mask collapses to all-ones i2i, which carries
  // no regional correspondence; the refinement is skipped.
  const bool has_regions = !masks.region_masks.empty();

  LoopResult result;
  result.region_count = masks.region_masks.size();
  result.text_tokens = layout.total_tokens;

  Rng rng(mix_seed(cfg.seed, 1));
  Matrix x(cfg.grid.cells(), d);
  for (double& v : x.data()) v = rng.normal();

  RegionalBlockInput regional{Matrix{}, std::move(text_hidden), std::move(joint)};
  for (int s = 0; s < cfg.total_steps; ++s) {
    const bool gate = cfg.regional_enabled && s < cfg.injection_steps;
    Matrix prediction = global_stage_forward(x, global_hidden, weights.global);
    if (gate && has_regions) {
      regional.image_hidden = std::move(prediction);
      prediction = regional_block_forward(regional, weights.regional);
    }
    const double a = 1.0 - static_cast<double>(s + 1) / (2.0 * cfg.total_steps);
    for (std::size_t i = 0; i < x.data().size(); ++i) x.data()[i] = a * x.data()[i] + (1.0 - a) * prediction.data()[i];
    result.trace.push_back(summarize(s, gate, x));
  }
  result.latent = std::move(x);
  return result;
}

std::string trace_to_json(const StepTrace& trace) {
  json steps = json::array();
  for (const auto& r : trace) {
    steps.push_back({{"index", r.index},
                     {"regional_applied", r.regional_applied},
                     {"mean", r.mean},
                     {"variance", r.variance},
                     {"l2_norm", r.l2_norm}});
  }
  return json{{"steps", steps}}.dump(2) + "\n";
}

std::string latent_to_text(const Matrix& latent) {
  std::string out = std::to_string(latent.rows()) + " " + std::to_string(latent.cols()) + "\n";
  for (std::size_t r = 0; r < latent.rows(); ++r) {
    for (std::size_t c = 0; c < latent.cols(); ++c) {
      if (c) out.push_back(' ');
      out += hex(latent(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

BuildReport build_all(const fs::path& scene_path, const BuildConfig& cfg, const fs::path& out_dir) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const Scene scene = load_scene(scene_path);
  const PreparedRegions prepared = prepare(scene.regions, cfg.prep);
  ensure_dir(out_dir);

  BuildReport report;
  report.source_id = scene.source_id;
  report.active_count = prepared.active_count;

  json levels = json::array();
  json timings = json::object();
  for (int side : cfg.levels) {
    if (side < 1) throw Error(ErrorKind::Config, kModule, "level " + std::to_string(side) + " must be >= 1");
    const auto tl = clock::now();
    const GridSpec grid = square_grid(side);
    const RegionGridMasks masks = rasterize_level(prepared, grid, cfg.rule, &report.drop_log);
    const TextLayout layout = layout_for_slots(prepared, masks.slots);
    const RegionalMask mask = build_regional_mask(masks, layout);

    const std::string base = level_name(grid);
    std::vector<std::string> files{base + ".rmask", base + ".rattn", base + "_joint.pgm", base + "_background.pgm"};
    write_rmask(masks, out_dir / files[0]);
    write_rattn(mask, out_dir / files[1]);
    write_mask_pgm(mask.joint, out_dir / files[2]);
    write_mask_pgm(unflatten(masks.background, grid), out_dir / files[3]);
    for (std::size_t k = 0; k < masks.region_masks.size(); ++k) {
      files.push_back(base + "_region" + std::to_string(k) + ".pgm");
      write_mask_pgm(unflatten(masks.region_masks[k], grid), out_dir / files.back());
    }

    report.levels.push_back({grid, masks.slots, layout.total_tokens, grid.cells()});
    levels.push_back({{"level", grid.level_id},
                      {"height", grid.height},
                      {"width", grid.width},
                      {"region_count", masks.region_masks.size()},
                      {"slots", masks.slots},
                      {"text_tokens", layout.total_tokens},
                      {"image_tokens", grid.cells()},
                      {"files", files}});
    report.files.insert(report.files.end(), files.begin(), files.end());
    timings[base] = std::chrono::duration<double, std::milli>(clock::now() - tl).count();
  }

  json drops = json::array();
  for (const auto& d : report.drop_log) drops.push_back({{"level", d.level_id}, {"slot", d.slot}, {"caption", d.caption}});

  json doc{{"source_id", scene.source_id},
           {"active_count", prepared.active_count},
           {"rule", to_string(cfg.rule)},
           {"confidence_threshold", cfg.prep.confidence_threshold},
           {"max_regions", cfg.prep.max_regions},
           {"levels", levels},
           {"drop_log", drops}};
  if (cfg.with_timings) {
    timings["total"] = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    doc["timings_ms"] = timings;
  }
  report.json = doc.dump(2) + "\n";
  write_text(out_dir / "report.json", report.json);
  report.files.push_back("report.json");
  return report;
}

LoopResult simulate(const fs::path& scene_path, const LoopConfig& cfg, const fs::path& out_dir) {
  validate(cfg);
  const Scene scene = load_scene(scene_path);
  const StageWeights weights = StageWeights::init(cfg.model_dim, cfg.heads, cfg.seed);
  LoopResult result = run_loop(scene, cfg, weights);

  ensure_dir(out_dir);
  json summary{{"source_id", scene.source_id},
               {"total_steps", cfg.total_steps},
               {"injection_steps", cfg.injection_steps},
               {"seed", cfg.seed},
               {"grid", {cfg.grid.height, cfg.grid.width}},
               {"region_count", result.region_count},
               {"text_tokens", result.text_tokens},
               {"regional_steps", std::count_if(result.trace.begin(), result.trace.end(),
                                                [](const StepRecord& r) { return r.regional_applied; })}};
  write_text(out_dir / "trace.json", trace_to_json(result.trace));
  write_text(out_dir / "latent.txt", latent_to_text(result.latent));
  write_text(out_dir / "simulate.json", summary.dump(2) + "\n");
  return result;
}

}  // namespace ragsr
