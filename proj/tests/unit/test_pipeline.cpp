#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "ragsr/error.hpp"
#include "ragsr/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ragsr;

namespace {

const fs::path kData = RAGSR_TEST_DATA_DIR;

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "ragsr_pipeline_tests" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

LoopConfig small_loop(int k) {
  LoopConfig cfg;
  cfg.grid = square_grid(8);
  cfg.injection_steps = k;
  return cfg;
}

}  // namespace

TEST(RunLoop, GateIsPrefixOfLengthK) {
  const Scene scene = load_scene(kData / "two_regions.json");
  const StageWeights w = StageWeights::init(8, 2, 0);
  const LoopResult r = run_loop(scene, small_loop(25), w);
  ASSERT_EQ(r.trace.size(), 50u);
  for (const auto& s : r.trace) EXPECT_EQ(s.regional_applied, s.index < 25) << s.index;
  EXPECT_EQ(r.region_count, 2u);
  EXPECT_EQ(r.text_tokens, 13u);
}

TEST(RunLoop, KZeroEqualsDisabledRegionalStage) {
  const Scene scene = load_scene(kData / "two_regions.json");
  const StageWeights w = StageWeights::init(8, 2, 0);
  LoopConfig off = small_loop(50);
  off.regional_enabled = false;
  const LoopResult a = run_loop(scene, small_loop(0), w);
  const LoopResult b = run_loop(scene, off, w);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.latent, b.latent);
  // And the regional stage does change the result when it runs.
  EXPECT_NE(run_loop(scene, small_loop(50), w).latent, a.latent);
}

TEST(RunLoop, ZeroRegionSceneIgnoresInjection) {
  const Scene scene = load_scene(kData / "below_threshold.json");
  const StageWeights w = StageWeights::init(8, 2, 0);
  const LoopResult a = run_loop(scene, small_loop(50), w);
  const LoopResult b = run_loop(scene, small_loop(0), w);
  EXPECT_EQ(a.region_count, 0u);
  EXPECT_EQ(a.latent, b.latent);
}

TEST(RunLoop, RejectsBadConfig) {
  const Scene scene = load_scene(kData / "two_regions.json");
  const StageWeights w = StageWeights::init(8, 2, 0);
  LoopConfig cfg = small_loop(51);
  try {
    run_loop(scene, cfg, w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    EXPECT_EQ(e.module(), "pipeline");
  }
  cfg.injection_steps = -1;
  EXPECT_THROW(run_loop(scene, cfg, w), Error);
  cfg.injection_steps = 0;
  cfg.total_steps = 0;
  EXPECT_THROW(run_loop(scene, cfg, w), Error);
}

TEST(RunLoop, DeterministicAndGlobalTokenSwitch) {
  const Scene scene = load_scene(kData / "two_regions.json");
  const StageWeights w = StageWeights::init(8, 2, 7);
  LoopConfig cfg = small_loop(10);
  cfg.seed = 7;
  EXPECT_EQ(run_loop(scene, cfg, w).latent, run_loop(scene, cfg, w).latent);
  LoopConfig with_global = cfg;
  with_global.include_global_tokens = true;
  const LoopResult g = run_loop(scene, with_global, w);
  EXPECT_TRUE(g.latent.all_finite());
  EXPECT_NE(g.latent, run_loop(scene, cfg, w).latent);
}

TEST(BuildAll, FileInventoryAndReport) {
  const auto out = fresh_dir("inventory");
  const BuildReport report = build_all(kData / "two_regions.json", BuildConfig{}, out);
  for (int level : {64, 32, 16, 8}) {
    const std::string base = "level_" + std::to_string(level);
    EXPECT_TRUE(fs::exists(out / (base + ".rmask"))) << base;
    EXPECT_TRUE(fs::exists(out / (base + ".rattn"))) << base;
    EXPECT_TRUE(fs::exists(out / (base + "_joint.pgm"))) << base;
  }
  const auto doc = nlohmann::json::parse(slurp(out / "report.json"));
  EXPECT_EQ(doc["active_count"], 2);
  ASSERT_EQ(doc["levels"].size(), 4u);
  for (const auto& lvl : doc["levels"]) EXPECT_EQ(lvl["region_count"], 2);
  EXPECT_FALSE(doc.contains("timings_ms"));

  const std::string rattn = slurp(out / "level_8.rattn");
  EXPECT_EQ(rattn.substr(0, rattn.find('\n')), "RATTN v1 13 64");
}

TEST(BuildAll, BelowThresholdSceneHasAllOnesImageMask) {
  const auto out = fresh_dir("below");
  BuildConfig cfg;
  cfg.levels = {8, 4};
  const BuildReport report = build_all(kData / "below_threshold.json", cfg, out);
  EXPECT_EQ(report.active_count, 0u);
  std::istringstream rattn(slurp(out / "level_8.rattn"));
  std::string line;
  std::getline(rattn, line);
  EXPECT_EQ(line, "RATTN v1 0 64");
  int rows = 0;
  while (std::getline(rattn, line)) {
    EXPECT_EQ(line, std::string(64, '1'));
    ++rows;
  }
  EXPECT_EQ(rows, 64);
}

TEST(BuildAll, RerunIsByteIdenticalAndTimingsOptIn) {
  const auto a = fresh_dir("rerun_a"), b = fresh_dir("rerun_b");
  BuildConfig cfg;
  cfg.levels = {16, 8};
  const auto ra = build_all(kData / "two_regions.json", cfg, a);
  build_all(kData / "two_regions.json", cfg, b);
  for (const auto& f : ra.files) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;

  cfg.with_timings = true;
  build_all(kData / "two_regions.json", cfg, a);
  EXPECT_TRUE(nlohmann::json::parse(slurp(a / "report.json")).contains("timings_ms"));
}

TEST(BuildAll, ErrorsCarryModule) {
  try {
    build_all(kData / "missing.json", BuildConfig{}, fresh_dir("missing"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.module(), "scene_io");
  }
}

TEST(Simulate, WritesTraceAndLatent) {
  const auto out = fresh_dir("sim");
  LoopConfig cfg = small_loop(5);
  const LoopResult r = simulate(kData / "two_regions.json", cfg, out);
  const auto trace = nlohmann::json::parse(slurp(out / "trace.json"));
  ASSERT_EQ(trace["steps"].size(), 50u);
  EXPECT_TRUE(trace["steps"][4]["regional_applied"].get<bool>());
  EXPECT_FALSE(trace["steps"][5]["regional_applied"].get<bool>());
  EXPECT_EQ(slurp(out / "latent.txt"), latent_to_text(r.latent));
}
