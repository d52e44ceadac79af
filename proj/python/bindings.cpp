#include <optional>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ragsr/attention.hpp"
#include "ragsr/box_prep.hpp"
#include "ragsr/degrade.hpp"
#include "ragsr/error.hpp"
#include "ragsr/mask.hpp"
#include "ragsr/pipeline.hpp"
#include "ragsr/raster.hpp"
#include "ragsr/scene.hpp"
#include "ragsr/verify.hpp"

namespace py = pybind11;
using namespace ragsr;

namespace {

using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using BoolArray = py::array_t<bool, py::array::c_style>;

BoolArray to_numpy(const BitMatrix& m) {
  BoolArray out({m.rows(), m.cols()});
  auto* dst = out.mutable_data();
  for (std::size_t i = 0; i < m.data().size(); ++i) dst[i] = m.data()[i] != 0;
  return out;
}

BoolArray to_numpy(const BitVector& v, const GridSpec& grid) {
  BoolArray out({static_cast<std::size_t>(grid.height), static_cast<std::size_t>(grid.width)});
  auto* dst = out.mutable_data();
  for (std::size_t i = 0; i < v.size(); ++i) dst[i] = v[i] != 0;
  return out;
}

BitMatrix to_bits(const py::array& a) {
  auto arr = py::array_t<bool, py::array::c_style | py::array::forcecast>::ensure(a);
  if (!arr || arr.ndim() != 2) throw Error(ErrorKind::Shape, "python", "mask must be a 2-D boolean array");
  BitMatrix m(arr.shape(0), arr.shape(1));
  for (py::ssize_t r = 0; r < arr.shape(0); ++r)
    for (py::ssize_t c = 0; c < arr.shape(1); ++c) m.set(r, c, arr.at(r, c));
  return m;
}

Matrix to_matrix(const F64Array& a) {
  if (a.ndim() != 2) throw Error(ErrorKind::Shape, "python", "expected a 2-D array");
  return Matrix(a.shape(0), a.shape(1), std::vector<double>(a.data(), a.data() + a.size()));
}

F64Array to_numpy(const Matrix& m) {
  F64Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

// (heads, n, d) arrays -> per-head matrices.
std::vector<Matrix> split_heads(const F64Array& a, const char* name) {
  if (a.ndim() != 3) throw Error(ErrorKind::Shape, "python", std::string(name) + " must have shape (heads, n, d)");
  std::vector<Matrix> out;
  const std::size_t n = a.shape(1), d = a.shape(2);
  for (py::ssize_t h = 0; h < a.shape(0); ++h) {
    const double* p = a.data() + h * n * d;
    out.emplace_back(n, d, std::vector<double>(p, p + n * d));
  }
  return out;
}

F64Array stack_heads(const std::vector<Matrix>& ms) {
  const std::size_t rows = ms.empty() ? 0 : ms[0].rows(), cols = ms.empty() ? 0 : ms[0].cols();
  F64Array out({ms.size(), rows, cols});
  double* dst = out.mutable_data();
  for (const auto& m : ms) dst = std::copy(m.data().begin(), m.data().end(), dst);
  return out;
}

AttentionBatch make_batch(const F64Array& q, const F64Array& k, const F64Array& v, std::optional<double> scale) {
  auto qs = split_heads(q, "q"), ks = split_heads(k, "k"), vs = split_heads(v, "v");
  if (qs.size() != ks.size() || qs.size() != vs.size()) {
    throw Error(ErrorKind::Shape, "python", "q, k and v must have the same number of heads");
  }
  std::vector<HeadInputs> heads;
  for (std::size_t h = 0; h < qs.size(); ++h) heads.push_back({std::move(qs[h]), std::move(ks[h]), std::move(vs[h])});
  AttentionBatch batch = AttentionBatch::with_default_scale(std::move(heads));
  if (scale) batch.scale = *scale;
  return batch;
}

ImageBuffer to_image(const F64Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw Error(ErrorKind::Shape, "python", "image must be (H, W) or (H, W, C)");
  ImageBuffer img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1);
  std::copy(a.data(), a.data() + a.size(), img.data.begin());
  validate(img);
  return img;
}

F64Array to_numpy(const ImageBuffer& img) {
  std::vector<py::ssize_t> shape{img.height, img.width};
  if (img.channels != 1) shape.push_back(img.channels);
  F64Array out(shape);
  std::copy(img.data.begin(), img.data.end(), out.mutable_data());
  return out;
}

py::dict level_masks(const PreparedRegions& prepared, int height, int width, const std::string& rule) {
  const GridSpec grid{height, width, height == width ? height : 0};
  const RegionGridMasks masks = rasterize_level(prepared, grid, parse_coverage_rule(rule));
  const TextLayout layout = layout_for_slots(prepared, masks.slots);
  const RegionalMask m = build_regional_mask(masks, layout);
  py::list regions;
  for (const auto& r : masks.region_masks) regions.append(to_numpy(r, grid));
  py::list spans;
  for (const auto& s : layout.spans) spans.append(py::make_tuple(s.offset, s.length));
  py::dict out;
  out["slots"] = masks.slots;
  out["spans"] = spans;
  out["regions"] = regions;
  out["background"] = to_numpy(masks.background, grid);
  out["t2t"] = to_numpy(m.t2t);
  out["t2i"] = to_numpy(m.t2i);
  out["i2t"] = to_numpy(m.i2t);
  out["i2i"] = to_numpy(m.i2i);
  out["joint"] = to_numpy(m.joint);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Region masks, masked attention, toy sampling loop and LR synthesis";

  static py::exception<Error> error_type(m, "RagsrError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error_type, e.what());
    }
  });

  py::class_<BoundingBox>(m, "BoundingBox")
      .def(py::init<>())
      .def(py::init([](double x0, double y0, double x1, double y1, double confidence) {
             return BoundingBox{x0, y0, x1, y1, confidence};
           }),
           py::arg("x0"), py::arg("y0"), py::arg("x1"), py::arg("y1"), py::arg("confidence") = 1.0)
      .def_readwrite("x0", &BoundingBox::x0)
      .def_readwrite("y0", &BoundingBox::y0)
      .def_readwrite("x1", &BoundingBox::x1)
      .def_readwrite("y1", &BoundingBox::y1)
      .def_readwrite("confidence", &BoundingBox::confidence)
      .def("__eq__", [](const BoundingBox& a, const BoundingBox& b) { return a == b; })
      .def("__repr__", [](const BoundingBox& b) {
        return "BoundingBox(" + std::to_string(b.x0) + ", " + std::to_string(b.y0) + ", " + std::to_string(b.x1) +
               ", " + std::to_string(b.y1) + ", confidence=" + std::to_string(b.confidence) + ")";
      });

  py::class_<RegionAnnotation>(m, "RegionAnnotation")
      .def(py::init<>())
      .def(py::init([](BoundingBox box, std::string caption, int token_count) {
             return RegionAnnotation{box, std::move(caption), token_count};
           }),
           py::arg("box"), py::arg("caption"), py::arg("token_count"))
      .def_readwrite("box", &RegionAnnotation::box)
      .def_readwrite("caption", &RegionAnnotation::caption)
      .def_readwrite("token_count", &RegionAnnotation::token_count)
      .def("is_padding", &RegionAnnotation::is_padding)
      .def("__eq__", [](const RegionAnnotation& a, const RegionAnnotation& b) { return a == b; });

  py::class_<Scene>(m, "Scene")
      .def(py::init<>())
      .def_readwrite("source_id", &Scene::source_id)
      .def_readwrite("image_width", &Scene::image_width)
      .def_readwrite("image_height", &Scene::image_height)
      .def_readwrite("global_caption", &Scene::global_caption)
      .def_readwrite("regions", &Scene::regions)
      .def("active_count", &Scene::active_count)
      .def("to_json", [](const Scene& s) { return scene_to_json(s); });

  m.def("load_scene", &load_scene, py::arg("path"));
  m.def("save_scene", &save_scene, py::arg("scene"), py::arg("path"));
  m.def("parse_scene", [](const std::string& text) { return parse_scene_json(text); }, py::arg("text"));

  py::class_<PreparedRegions>(m, "PreparedRegions")
      .def_readonly("slots", &PreparedRegions::slots)
      .def_readonly("active_count", &PreparedRegions::active_count);

  m.def(
      "prepare",
      [](const std::vector<RegionAnnotation>& candidates, double threshold, std::size_t max_regions) {
        return prepare(candidates, PrepConfig{threshold, max_regions});
      },
      py::arg("candidates"), py::arg("threshold") = 0.4, py::arg("max_regions") = 5);

  m.def(
      "build_masks",
      [](const Scene& scene, int height, std::optional<int> width, const std::string& rule, double threshold,
         std::size_t max_regions) {
        const PreparedRegions prepared = prepare(scene.regions, PrepConfig{threshold, max_regions});
        return level_masks(prepared, height, width.value_or(height), rule);
      },
      py::arg("scene"), py::arg("height"), py::arg("width") = py::none(), py::arg("rule") = "center",
      py::arg("threshold") = 0.4, py::arg("max_regions") = 5,
      "Region, background and joint masks for one grid. Arrays are boolean; the joint mask puts text tokens first.");

  m.def(
      "attention_forward",
      [](const F64Array& q, const F64Array& k, const F64Array& v, std::optional<py::array> mask,
         std::optional<double> scale) {
        const AttentionBatch batch = make_batch(q, k, v, scale);
        const AttentionResult r = mask ? masked_attention_forward(batch, to_bits(*mask)) : attention_forward(batch);
        return py::make_tuple(stack_heads(r.outputs), stack_heads(r.weights));
      },
      py::arg("q"), py::arg("k"), py::arg("v"), py::arg("mask") = py::none(), py::arg("scale") = py::none(),
      "Arrays have shape (heads, n, d). Returns (outputs, weights).");

  m.def(
      "attention_backward",
      [](const F64Array& q, const F64Array& k, const F64Array& v, const F64Array& upstream,
         std::optional<py::array> mask, std::optional<double> scale) {
        const AttentionBatch batch = make_batch(q, k, v, scale);
        const AttentionResult r = mask ? masked_attention_forward(batch, to_bits(*mask)) : attention_forward(batch);
        const auto up = split_heads(upstream, "upstream");
        const AttentionGrads g = masked_attention_backward(batch, r, up);
        return py::make_tuple(stack_heads(g.dq), stack_heads(g.dk), stack_heads(g.dv));
      },
      py::arg("q"), py::arg("k"), py::arg("v"), py::arg("upstream"), py::arg("mask") = py::none(),
      py::arg("scale") = py::none(), "Gradients of sum(upstream * outputs). Returns (dq, dk, dv).");

  m.def(
      "run_loop",
      [](const Scene& scene, int total_steps, int injection_steps, int level, std::uint64_t seed,
         bool regional_enabled, bool include_global_tokens, std::size_t model_dim, std::size_t heads) {
        LoopConfig cfg;
        cfg.total_steps = total_steps;
        cfg.injection_steps = injection_steps;
        cfg.grid = square_grid(level);
        cfg.seed = seed;
        cfg.regional_enabled = regional_enabled;
        cfg.include_global_tokens = include_global_tokens;
        cfg.model_dim = model_dim;
        cfg.heads = heads;
        validate(cfg);
        const LoopResult r = run_loop(scene, cfg, StageWeights::init(model_dim, heads, seed));
        py::list trace;
        for (const auto& s : r.trace) {
          py::dict d;
          d["index"] = s.index;
          d["regional_applied"] = s.regional_applied;
          d["mean"] = s.mean;
          d["variance"] = s.variance;
          d["l2_norm"] = s.l2_norm;
          trace.append(d);
        }
        return py::make_tuple(trace, to_numpy(r.latent));
      },
      py::arg("scene"), py::arg("total_steps") = 50, py::arg("injection_steps") = 50, py::arg("level") = 16,
      py::arg("seed") = 0, py::arg("regional_enabled") = true, py::arg("include_global_tokens") = false,
      py::arg("model_dim") = 8, py::arg("heads") = 2, "Returns (trace, latent).");

  m.def(
      "degrade",
      [](const F64Array& image, int scale, double blur_sigma, double noise_sigma, bool quantize, std::uint64_t seed) {
        return to_numpy(degrade(to_image(image), DegradeConfig{scale, blur_sigma, noise_sigma, quantize, seed}));
      },
      py::arg("image"), py::arg("scale") = 4, py::arg("blur_sigma") = 1.2, py::arg("noise_sigma") = 0.02,
      py::arg("quantize") = true, py::arg("seed") = 0, "Image intensities are on [0, 1].");

  m.def(
      "psnr", [](const F64Array& a, const F64Array& b) { return psnr(to_image(a), to_image(b)); }, py::arg("a"),
      py::arg("b"));

  m.def(
      "verify_json",
      [](const std::string& suite, std::size_t scenes, std::uint64_t seed) {
        VerifyOptions opts;
        opts.suite = suite;
        opts.scenes = scenes;
        opts.seed = seed;
        return verify(opts).to_json();
      },
      py::arg("suite") = "all", py::arg("scenes") = 1000, py::arg("seed") = 0);
}
