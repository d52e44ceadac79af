#include "ragsr/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "ragsr/attention.hpp"
#include "ragsr/mask.hpp"
#include "ragsr/pipeline.hpp"
#include "ragsr/raster.hpp"
#include "ragsr/rng.hpp"

namespace ragsr {
namespace {

constexpr std::size_t kMaxMessages = 8;
// Box-selection constants the prep suite holds the library to.
constexpr double kReferenceThreshold = 0.4;
constexpr std::size_t kReferenceSlots = 5;

SuiteResult named_result(std::string name) {
  SuiteResult r;
  r.name = std::move(name);
  return r;
}

void fail(SuiteResult& r, const std::string& message) {
  r.passed = false;
  ++r.failures;
  if (r.messages.size() < kMaxMessages) r.messages.push_back(message);
}

RegionAnnotation random_region(Rng& rng, int max_tokens, double conf_lo = 0.4) {
  RegionAnnotation r;
  double xa = rng.uniform(), xb = rng.uniform(), ya = rng.uniform(), yb = rng.uniform();
  if (rng.uniform() < 0.15) {  // tiny box, often empty on coarse grids
    xb = std::min(1.0, xa + 0.02 * rng.uniform());
    yb = std::min(1.0, ya + 0.02 * rng.uniform());
  }
  r.box = {std::min(xa, xb), std::min(ya, yb), std::max(xa, xb), std::max(ya, yb), rng.uniform(conf_lo, 1.0)};
  r.token_count = static_cast<int>(rng.uniform_int(1, max_tokens));
  r.caption = "region " + std::to_string(r.token_count);
  return r;
}

bool center_inside(const BoundingBox& b, int r, int c, int h, int w) {
  const double cx = (c + 0.5) / w, cy = (r + 0.5) / h;
  return b.x0 <= cx && cx <= b.x1 && b.y0 <= cy && cy <= b.y1;
}

// Per-entry predicate for the joint mask, built from boxes and token counts only.
struct ReferenceScene {
  int h = 1, w = 1;
  std::vector<std::vector<bool>> member;  // surviving region x cell
  std::vector<std::size_t> token_region;  // text token -> surviving region

  ReferenceScene(const std::vector<RegionAnnotation>& active, int h_, int w_) : h(h_), w(w_) {
    for (const auto& reg : active) {
      std::vector<bool> cells(static_cast<std::size_t>(h) * w);
      bool any = false;
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) any |= (cells[r * w + c] = center_inside(reg.box, r, c, h, w));
      if (!any) continue;
      const std::size_t idx = member.size();
      member.push_back(std::move(cells));
      token_region.insert(token_region.end(), static_cast<std::size_t>(reg.token_count), idx);
    }
  }

  std::size_t text() const { return token_region.size(); }
  bool background(std::size_t cell) const {
    return std::none_of(member.begin(), member.end(), [cell](const auto& m) { return m[cell]; });
  }
  bool allowed(std::size_t a, std::size_t b) const {
    const std::size_t T = text();
    if (a < T && b < T) return token_region[a] == token_region[b];
    if (a < T) return member[token_region[a]][b - T];
    if (b < T) return member[token_region[b]][a - T];
    const std::size_t i = a - T, j = b - T;
    if (background(i) && background(j)) return true;
    return std::any_of(member.begin(), member.end(), [i, j](const auto& m) { return m[i] && m[j]; });
  }
};

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

// Plain softmax attention over all keys, used as the per-block reference.
Matrix reference_attention(const Matrix& q, const Matrix& k, const Matrix& v, double scale) {
  Matrix out(q.rows(), v.cols());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    std::vector<double> s(k.rows());
    for (std::size_t j = 0; j < k.rows(); ++j) {
      double dot = 0.0;
      for (std::size_t d = 0; d < q.cols(); ++d) dot += q(i, d) * k(j, d);
      s[j] = scale * dot;
    }
    const double m = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double& x : s) z += (x = std::exp(x - m));
    for (std::size_t j = 0; j < k.rows(); ++j)
      for (std::size_t d = 0; d < v.cols(); ++d) out(i, d) += s[j] / z * v(j, d);
  }
  return out;
}

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(rows[r], c);
  return out;
}

double loss(const AttentionBatch& batch, const BitMatrix& mask, const std::vector<Matrix>& upstream) {
  const auto res = masked_attention_forward(batch, mask);
  double l = 0.0;
  for (std::size_t h = 0; h < upstream.size(); ++h)
    for (std::size_t i = 0; i < upstream[h].data().size(); ++i) l += upstream[h].data()[i] * res.outputs[h].data()[i];
  return l;
}

Scene gate_scene(bool with_regions) {
  Scene s;
  s.source_id = "gate";
  s.image_width = 256;
  s.image_height = 256;
  s.global_caption = "a harbor at dusk with boats";
  if (with_regions) {
    s.regions.push_back({{0.0, 0.0, 0.5, 0.5, 0.9}, "a red boat", 3});
    s.regions.push_back({{0.5, 0.25, 1.0, 1.0, 0.7}, "a lighthouse on rocks", 4});
  } else {
    s.regions.push_back({{0.0, 0.0, 0.5, 0.5, 0.39}, "a faint shape", 3});
    s.regions.push_back({{0.5, 0.5, 1.0, 1.0, 0.1}, "noise", 1});
  }
  return s;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"masks", "disjoint", "grad", "prep", "gate"};
  return names;
}

SuiteResult verify_masks(std::size_t scenes, std::uint64_t seed) {
  SuiteResult res = named_result("masks");
  res.metric_name = "exact_matches";
  Rng rng(mix_seed(seed, 11));
  std::size_t matches = 0;
  for (std::size_t n = 0; n < scenes; ++n) {
    const int h = static_cast<int>(rng.uniform_int(1, 16));
    const int w = static_cast<int>(rng.uniform_int(1, 16));
    std::vector<RegionAnnotation> cands;
    const auto count = rng.uniform_int(0, 5);
    for (std::int64_t t = 0; t < count; ++t) cands.push_back(random_region(rng, 8));
    const PreparedRegions prepared = prepare(cands);
    const GridSpec grid{h, w, h};
    const RegionGridMasks masks = rasterize_level(prepared, grid, CoverageRule::Center);
    const RegionalMask mask = build_regional_mask(masks, layout_for_slots(prepared, masks.slots));
    ++res.cases;

    const std::vector<RegionAnnotation> active(prepared.active().begin(), prepared.active().end());
    const ReferenceScene ref(active, h, w);
    const std::size_t N = ref.text() + grid.cells();
    bool exact = mask.joint.rows() == N && mask.joint.cols() == N;
    for (std::size_t a = 0; exact && a < N; ++a)
      for (std::size_t b = 0; exact && b < N; ++b) exact = mask.joint(a, b) == ref.allowed(a, b);
    if (exact) {
      ++matches;
    } else {
      fail(res, "scene " + std::to_string(n) + ": joint mask differs from the per-entry predicate");
    }

    if (mask.t2i != mask.i2t.transposed()) fail(res, "scene " + std::to_string(n) + ": t2i != i2t^T");
    if (!mask.i2i.is_symmetric()) fail(res, "scene " + std::to_string(n) + ": i2i not symmetric");
    if (!mask.t2t.is_symmetric()) fail(res, "scene " + std::to_string(n) + ": t2t not symmetric");
    for (std::size_t d = 0; d < mask.joint.rows(); ++d) {
      if (!mask.joint(d, d)) {
        fail(res, "scene " + std::to_string(n) + ": joint diagonal entry " + std::to_string(d) + " unset");
        break;
      }
    }
  }
  res.metric = static_cast<double>(matches);
  return res;
}

SuiteResult verify_disjoint(std::size_t instances, std::uint64_t seed) {
  SuiteResult res = named_result("disjoint");
  res.metric_name = "max_rel_linf";
  Rng rng(mix_seed(seed, 12));
  double worst = 0.0;
  for (std::size_t n = 0; n < instances; ++n) {
    const int h = static_cast<int>(rng.uniform_int(2, 8));
    const int w = static_cast<int>(rng.uniform_int(2, 8));
    // Disjoint regions: one per vertical stripe, cell-aligned edges.
    const int k = static_cast<int>(rng.uniform_int(1, std::min(w, 5)));
    std::vector<int> cuts{0, w};
    while (static_cast<int>(cuts.size()) < k + 1) {
      const int c = static_cast<int>(rng.uniform_int(1, w - 1));
      if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<RegionAnnotation> cands;
    for (int t = 0; t < k; ++t) {
      const int r0 = static_cast<int>(rng.uniform_int(0, h - 1));
      const int r1 = static_cast<int>(rng.uniform_int(r0 + 1, h));
      RegionAnnotation reg;
      reg.box = {static_cast<double>(cuts[t]) / w, static_cast<double>(r0) / h, static_cast<double>(cuts[t + 1]) / w,
                 static_cast<double>(r1) / h, 1.0 - 0.1 * t};
      reg.token_count = static_cast<int>(rng.uniform_int(1, 4));
      reg.caption = "stripe";
      cands.push_back(reg);
    }
    const PreparedRegions prepared = prepare(cands);
    const GridSpec grid{h, w, h};
    const RegionGridMasks masks = rasterize_level(prepared, grid, CoverageRule::Center);
    const TextLayout layout = layout_for_slots(prepared, masks.slots);
    const RegionalMask mask = build_regional_mask(masks, layout);
    const std::size_t T = layout.total_tokens, N = T + grid.cells();

    // Blocks: each region's tokens plus cells, then the background cells.
    std::vector<std::vector<std::size_t>> blocks;
    for (std::size_t t = 0; t < masks.region_masks.size(); ++t) {
      std::vector<std::size_t> members;
      for (std::size_t j = layout.spans[t].offset; j < layout.spans[t].offset + layout.spans[t].length; ++j)
        members.push_back(j);
      for (std::size_t i = 0; i < grid.cells(); ++i)
        if (masks.region_masks[t][i]) members.push_back(T + i);
      blocks.push_back(std::move(members));
    }
    std::vector<std::size_t> bg;
    for (std::size_t i = 0; i < grid.cells(); ++i)
      if (masks.background[i]) bg.push_back(T + i);
    if (!bg.empty()) blocks.push_back(std::move(bg));

    const std::size_t heads = static_cast<std::size_t>(rng.uniform_int(1, 2));
    const std::size_t dh = static_cast<std::size_t>(rng.uniform_int(1, 4));
    std::vector<HeadInputs> hs;
    for (std::size_t hh = 0; hh < heads; ++hh)
      hs.push_back({random_matrix(N, dh, rng), random_matrix(N, dh, rng), random_matrix(N, dh, rng)});
    const AttentionBatch batch = AttentionBatch::with_default_scale(hs);
    const AttentionResult full = masked_attention_forward(batch, mask.joint);
    ++res.cases;

    double num = 0.0, den = 0.0;
    for (std::size_t hh = 0; hh < heads; ++hh) {
      for (const auto& members : blocks) {
        const Matrix ref = reference_attention(gather_rows(hs[hh].q, members), gather_rows(hs[hh].k, members),
                                               gather_rows(hs[hh].v, members), batch.scale);
        const Matrix got = gather_rows(full.outputs[hh], members);
        num = std::max(num, max_abs_diff(ref, got));
        den = std::max(den, max_abs(ref));
      }
    }
    const double rel = num / std::max(den, 1e-300);
    worst = std::max(worst, rel);
    if (!(rel <= 1e-10)) {
      std::ostringstream os;
      os << "instance " << n << ": rel L-inf " << rel << " > 1e-10";
      fail(res, os.str());
    }
  }
  res.metric = worst;
  return res;
}

SuiteResult verify_grad(std::size_t instances, std::uint64_t seed) {
  SuiteResult res = named_result("grad");
  res.metric_name = "max_rel_error";
  Rng rng(mix_seed(seed, 13));
  constexpr double h = 1e-5;
  double worst = 0.0;
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t seq = static_cast<std::size_t>(rng.uniform_int(1, 8));
    const std::size_t heads = static_cast<std::size_t>(rng.uniform_int(1, 2));
    const std::size_t dh = static_cast<std::size_t>(rng.uniform_int(1, 4));
    BitMatrix mask(seq, seq);
    for (std::size_t i = 0; i < seq; ++i)
      for (std::size_t j = 0; j < seq; ++j) mask.set(i, j, i == j || rng.uniform() < 0.5);
    std::vector<HeadInputs> hs;
    std::vector<Matrix> up;
    for (std::size_t hh = 0; hh < heads; ++hh) {
      hs.push_back({random_matrix(seq, dh, rng), random_matrix(seq, dh, rng), random_matrix(seq, dh, rng)});
      up.push_back(random_matrix(seq, dh, rng));
    }
    AttentionBatch batch = AttentionBatch::with_default_scale(hs);
    const AttentionResult fwd = masked_attention_forward(batch, mask);
    const AttentionGrads g = masked_attention_backward(batch, fwd, up);
    ++res.cases;

    for (std::size_t hh = 0; hh < heads; ++hh) {
      const std::pair<Matrix HeadInputs::*, const Matrix*> params[] = {
          {&HeadInputs::q, &g.dq[hh]}, {&HeadInputs::k, &g.dk[hh]}, {&HeadInputs::v, &g.dv[hh]}};
      for (const auto& [member, analytic] : params) {
        Matrix& p = batch.heads[hh].*member;
        for (std::size_t e = 0; e < p.data().size(); ++e) {
          const double orig = p.data()[e];
          p.data()[e] = orig + h;
          const double lp = loss(batch, mask, up);
          p.data()[e] = orig - h;
          const double lm = loss(batch, mask, up);
          p.data()[e] = orig;
          const double numeric = (lp - lm) / (2 * h);
          const double a = analytic->data()[e];
          const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
          worst = std::max(worst, rel);
          if (!(rel <= 1e-4)) {
            std::ostringstream os;
            os << "instance " << n << ": analytic " << a << " vs numeric " << numeric << " (rel " << rel << ")";
            fail(res, os.str());
          }
        }
      }
    }
  }
  res.metric = worst;
  return res;
}

SuiteResult verify_prep(std::size_t lists, std::uint64_t seed, const PrepConfig& under_test) {
  SuiteResult res = named_result("prep");
  res.metric_name = "lists_checked";
  Rng rng(mix_seed(seed, 14));
  const std::string threshold_name = "confidence_threshold (reference 0.4)";
  const std::string slots_name = "max_regions (reference 5)";
  for (std::size_t n = 0; n < lists; ++n) {
    std::vector<RegionAnnotation> cands;
    const auto count = rng.uniform_int(0, 12);
    for (std::int64_t i = 0; i < count; ++i) {
      RegionAnnotation r = random_region(rng, 8, 0.0);
      const double pick = rng.uniform();
      if (pick < 0.15) r.box.confidence = kReferenceThreshold;
      else if (pick < 0.25) r.box.confidence = kReferenceThreshold - 1e-3;
      else if (pick < 0.35) r.box.confidence = kReferenceThreshold + 1e-3;
      else if (pick < 0.45 && !cands.empty()) r.box.confidence = cands.back().box.confidence;  // tie
      r.caption = "candidate " + std::to_string(i);
      cands.push_back(r);
    }
    const PreparedRegions out = prepare(cands, under_test);
    ++res.cases;
    const std::string where = "list " + std::to_string(n) + ": ";

    if (out.slots.size() != kReferenceSlots) {
      fail(res, where + "produced " + std::to_string(out.slots.size()) + " slots, violates " + slots_name);
      continue;
    }
    std::vector<RegionAnnotation> expected;
    for (const auto& c : cands)
      if (c.box.confidence >= kReferenceThreshold) expected.push_back(c);
    std::stable_sort(expected.begin(), expected.end(),
                     [](const auto& a, const auto& b) { return a.box.confidence > b.box.confidence; });
    if (expected.size() > kReferenceSlots) expected.resize(kReferenceSlots);

    for (std::size_t s = 0; s < out.active_count && s < out.slots.size(); ++s) {
      if (out.slots[s].box.confidence < kReferenceThreshold) {
        fail(res, where + "active slot " + std::to_string(s) + " below threshold, violates " + threshold_name);
      }
      if (s > 0 && out.slots[s].box.confidence > out.slots[s - 1].box.confidence) {
        fail(res, where + "active slots not in descending confidence order");
      }
    }
    if (out.active_count != expected.size()) {
      fail(res, where + "active_count " + std::to_string(out.active_count) + ", expected " +
                    std::to_string(expected.size()) + " under " + threshold_name + " and " + slots_name);
      continue;
    }
    for (std::size_t s = 0; s < expected.size(); ++s) {
      if (!(out.slots[s] == expected[s])) fail(res, where + "slot " + std::to_string(s) + " holds the wrong candidate");
    }
    for (std::size_t s = out.active_count; s < out.slots.size(); ++s) {
      const auto& p = out.slots[s];
      if (!p.box.is_zero() || !p.caption.empty() || p.token_count != 0) {
        fail(res, where + "slot " + std::to_string(s) + " is not zero-box / empty-caption padding");
      }
    }
  }
  res.metric = static_cast<double>(res.cases);
  return res;
}

SuiteResult verify_gate(std::uint64_t seed) {
  SuiteResult res = named_result("gate");
  res.metric_name = "configurations";
  LoopConfig base;
  base.grid = square_grid(8);
  base.seed = seed;
  const StageWeights weights = StageWeights::init(base.model_dim, base.heads, seed);
  const Scene scene = gate_scene(true);

  for (int k : {0, 1, 5, 25, 50}) {
    LoopConfig cfg = base;
    cfg.injection_steps = k;
    const LoopResult run = run_loop(scene, cfg, weights);
    ++res.cases;
    int applied = 0;
    bool prefix = true;
    for (const auto& r : run.trace) {
      applied += r.regional_applied ? 1 : 0;
      if (r.regional_applied != (r.index < k)) prefix = false;
    }
    if (static_cast<int>(run.trace.size()) != cfg.total_steps) fail(res, "K=" + std::to_string(k) + ": trace length");
    if (applied != k || !prefix) {
      fail(res, "K=" + std::to_string(k) + ": " + std::to_string(applied) + " regional steps or non-prefix gate");
    }
  }

  LoopConfig k0 = base;
  k0.injection_steps = 0;
  LoopConfig disabled = base;
  disabled.regional_enabled = false;
  const LoopResult a = run_loop(scene, k0, weights);
  const LoopResult b = run_loop(scene, disabled, weights);
  ++res.cases;
  if (!(a.trace == b.trace) || !(a.latent == b.latent)) fail(res, "K=0 run differs from regional-disabled run");

  LoopConfig k50 = base;
  k50.injection_steps = 50;
  const Scene empty = gate_scene(false);
  const LoopResult c = run_loop(empty, k50, weights);
  const LoopResult d = run_loop(empty, k0, weights);
  ++res.cases;
  if (!(c.latent == d.latent)) fail(res, "zero-region scene: K=50 latent differs from K=0 latent");

  res.metric = static_cast<double>(res.cases);
  return res;
}

bool VerifyReport::passed() const {
  return std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.passed; });
}

std::string VerifyReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : suites) {
    arr.push_back({{"suite", s.name},
                   {"passed", s.passed},
                   {"cases", s.cases},
                   {"failures", s.failures},
                   {s.metric_name.empty() ? "metric" : s.metric_name, s.metric},
                   {"messages", s.messages}});
  }
  return nlohmann::json{{"passed", passed()}, {"suites", arr}}.dump(2) + "\n";
}

VerifyReport verify(const VerifyOptions& opts) {
  VerifyReport report;
  const bool all = opts.suite == "all";
  if (!all && std::find(suite_names().begin(), suite_names().end(), opts.suite) == suite_names().end()) {
    SuiteResult bad = named_result(opts.suite);
    fail(bad, "unknown suite '" + opts.suite + "'");
    report.suites.push_back(bad);
    return report;
  }
  auto run = [&](const std::string& name, auto&& suite) {
    if (!all && opts.suite != name) return;
    try {
      report.suites.push_back(suite());
    } catch (const std::exception& e) {
      SuiteResult crashed = named_result(name);
      fail(crashed, std::string("suite raised: ") + e.what());
      report.suites.push_back(crashed);
    }
  };
  run("masks", [&] { return verify_masks(opts.scenes, opts.seed); });
  run("disjoint", [&] { return verify_disjoint(opts.disjoint_instances, opts.seed); });
  run("grad", [&] { return verify_grad(opts.grad_instances, opts.seed); });
  run("prep", [&] { return verify_prep(opts.scenes, opts.seed, opts.prep_under_test); });
  run("gate", [&] { return verify_gate(opts.seed); });
  return report;
}

}  // namespace ragsr
