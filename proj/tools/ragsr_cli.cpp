// Command-line front end: build-masks, simulate, verify, degrade, psnr, annotate.

#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ragsr/box_prep.hpp"
#include "ragsr/clients.hpp"
#include "ragsr/degrade.hpp"
#include "ragsr/error.hpp"
#include "ragsr/pipeline.hpp"
#include "ragsr/verify.hpp"

namespace {

using namespace ragsr;

struct ClientOptions {
  std::string mock_dir;
  std::string http_endpoint;
  double timeout = 30.0;
  std::string token_env = "RAGSR_API_TOKEN";
};

std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> levels;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      levels.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Config, "cli", "bad level '" + item + "' in --levels");
    }
  }
  if (levels.empty()) throw Error(ErrorKind::Config, "cli", "--levels is empty");
  return levels;
}

int run_annotate(const std::string& image_path, const std::string& source_id, const std::string& out,
                 const ClientOptions& clients, const PrepConfig& prep) {
  std::unique_ptr<DetectorClient> detector;
  std::unique_ptr<CaptionerClient> captioner;
  if (!clients.http_endpoint.empty()) {
    HttpClientConfig cfg{clients.http_endpoint, clients.timeout, clients.token_env};
    detector = std::make_unique<HttpDetector>(cfg);
    captioner = std::make_unique<HttpCaptioner>(cfg);
  } else if (!clients.mock_dir.empty()) {
    detector = std::make_unique<MockDetector>(clients.mock_dir);
    captioner = std::make_unique<MockCaptioner>(clients.mock_dir);
  } else {
    throw Error(ErrorKind::Config, "cli", "annotate needs --mock-dir or --http-endpoint");
  }

  const ImageBuffer img = read_pnm(image_path);
  const ImageRef ref{source_id, img.width, img.height, image_path};
  std::vector<RegionAnnotation> candidates;
  for (const auto& box : detect(ref, *detector)) candidates.push_back({box, "", 1});
  PreparedRegions prepared = prepare(candidates, prep);

  Scene scene;
  scene.source_id = source_id;
  scene.image_width = img.width;
  scene.image_height = img.height;
  scene.global_caption = caption(ref, std::nullopt, *captioner);
  for (std::size_t s = 0; s < prepared.active_count; ++s) {
    auto& slot = prepared.slots[s];
    slot.caption = caption(ref, slot.box, *captioner);
    slot.token_count = std::max(1, declared_token_count(slot.caption));
  }
  scene.regions = prepared.slots;
  save_scene(scene, out);
  std::cout << "wrote " << out << " (" << prepared.active_count << " active regions)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regional attention mask engine for text-guided super-resolution"};
  app.require_subcommand(1);
  app.fallthrough();

  ClientOptions clients;
  app.add_option("--mock-dir", clients.mock_dir, "Directory of recorded detector/captioner responses");
  app.add_option("--http-endpoint", clients.http_endpoint, "Base URL of a JSON detector/captioner service");
  app.add_option("--http-timeout", clients.timeout, "HTTP timeout in seconds");
  app.add_option("--token-env", clients.token_env, "Environment variable holding a bearer token");

  PrepConfig prep;
  app.add_option("--threshold", prep.confidence_threshold, "Box confidence threshold")->capture_default_str();
  app.add_option("--max-regions", prep.max_regions, "Region slots per image")->capture_default_str();

  // build-masks
  auto* build = app.add_subcommand("build-masks", "Rasterize regions and write RMASK/RATTN/PGM files");
  std::string build_scene, build_out = "masks", levels_text = "64,32,16,8", rule_name = "center";
  bool timings = false;
  build->add_option("scene", build_scene, "Scene JSON")->required();
  build->add_option("--levels", levels_text, "Comma-separated square grid sizes")->capture_default_str();
  build->add_option("--rule", rule_name, "Coverage rule: center|overlap")->capture_default_str();
  build->add_option("--out", build_out, "Output directory")->capture_default_str();
  build->add_flag("--timings", timings, "Include wall-clock timings in report.json");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run the gated toy denoising loop");
  std::string sim_scene, sim_out = "simulation", sim_rule = "center";
  LoopConfig loop;
  int level = 16;
  bool no_regional = false;
  sim->add_option("scene", sim_scene, "Scene JSON")->required();
  sim->add_option("--steps", loop.total_steps, "Total denoising steps")->capture_default_str();
  sim->add_option("--inject", loop.injection_steps, "Steps with regional attention (prefix)")->capture_default_str();
  sim->add_option("--seed", loop.seed, "Seed")->capture_default_str();
  sim->add_option("--level", level, "Square latent grid size")->capture_default_str();
  sim->add_option("--rule", sim_rule, "Coverage rule: center|overlap")->capture_default_str();
  sim->add_option("--model-dim", loop.model_dim, "Hidden size")->capture_default_str();
  sim->add_option("--heads", loop.heads, "Attention heads")->capture_default_str();
  sim->add_flag("--no-regional", no_regional, "Disable the regional stage entirely");
  sim->add_flag("--include-global-tokens", loop.include_global_tokens,
                "Let global-caption tokens join the regional stage");
  sim->add_option("--out", sim_out, "Output directory")->capture_default_str();

  // verify
  auto* ver = app.add_subcommand("verify", "Run the oracle self-check suites");
  VerifyOptions vopts;
  ver->add_option("--suite", vopts.suite, "all|masks|disjoint|grad|prep|gate")->capture_default_str();
  ver->add_option("--scenes", vopts.scenes, "Random scenes / candidate lists")->capture_default_str();
  ver->add_option("--seed", vopts.seed, "Seed")->capture_default_str();

  // degrade
  auto* deg = app.add_subcommand("degrade", "Synthesize a low-resolution image");
  std::string deg_in, deg_out = "lr.pgm";
  DegradeConfig dcfg;
  bool no_quantize = false;
  deg->add_option("image", deg_in, "Input PGM/PPM")->required();
  deg->add_option("--scale", dcfg.scale, "Downsampling factor")->capture_default_str();
  deg->add_option("--seed", dcfg.seed, "Noise seed")->capture_default_str();
  deg->add_option("--blur-sigma", dcfg.blur_sigma, "Gaussian blur sigma (pixels)")->capture_default_str();
  deg->add_option("--noise-sigma", dcfg.noise_sigma, "Gaussian noise sigma on [0,1]")->capture_default_str();
  deg->add_flag("--no-quantize", no_quantize, "Skip 8-bit rounding");
  deg->add_option("--out", deg_out, "Output PGM/PPM")->capture_default_str();

  // psnr
  auto* ps = app.add_subcommand("psnr", "PSNR between two PGM/PPM images");
  std::string ps_a, ps_b;
  ps->add_option("a", ps_a)->required();
  ps->add_option("b", ps_b)->required();

  // annotate
  auto* ann = app.add_subcommand("annotate", "Build a scene file from detector and captioner clients");
  std::string ann_image, ann_id, ann_out = "scene.json";
  ann->add_option("image", ann_image, "Input PGM/PPM")->required();
  ann->add_option("--source-id", ann_id, "Scene identifier (mock recording key)")->required();
  ann->add_option("--out", ann_out, "Output scene JSON")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build) {
      BuildConfig cfg;
      cfg.levels = parse_levels(levels_text);
      cfg.rule = parse_coverage_rule(rule_name);
      cfg.prep = prep;
      cfg.with_timings = timings;
      const BuildReport report = build_all(build_scene, cfg, build_out);
      std::cout << report.json;
      return 0;
    }
    if (*sim) {
      loop.grid = square_grid(level);
      loop.rule = parse_coverage_rule(sim_rule);
      loop.prep = prep;
      loop.regional_enabled = !no_regional;
      const LoopResult result = simulate(sim_scene, loop, sim_out);
      std::cout << "steps " << result.trace.size() << ", regions " << result.region_count << ", final l2 "
                << result.trace.back().l2_norm << "\n";
      return 0;
    }
    if (*ver) {
      vopts.prep_under_test = prep;
      const VerifyReport report = verify(vopts);
      std::cout << report.to_json();
      return report.passed() ? 0 : 1;
    }
    if (*deg) {
      dcfg.quantize = !no_quantize;
      const ImageBuffer hr = read_pnm(deg_in);
      const ImageBuffer lr = degrade(hr, dcfg);
      write_pnm(lr, deg_out);
      std::cout << hr.width << "x" << hr.height << " -> " << lr.width << "x" << lr.height;
      const ImageBuffer up = upsample_nearest(lr, dcfg.scale);
      if (up.width == hr.width && up.height == hr.height) {
        std::cout << ", psnr(hr, nearest-up(lr)) = " << psnr(hr, up) << " dB";
      }
      std::cout << "\n";
      return 0;
    }
    if (*ps) {
      std::cout << psnr(read_pnm(ps_a), read_pnm(ps_b)) << "\n";
      return 0;
    }
    if (*ann) return run_annotate(ann_image, ann_id, ann_out, clients, prep);
  } catch (const Error& e) {
    std::cerr << "error [" << e.module() << "/" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
