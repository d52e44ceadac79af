#include "ragsr/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ragsr/error.hpp"

namespace ragsr {
namespace {

using nlohmann::json;

constexpr const char* kModule = "scene_io";

[[noreturn]] void invariant(const std::string& message) {
  throw Error(ErrorKind::Invariant, kModule, message);
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorKind::MissingField, kModule, where + ": missing required field '" + key + "'");
  }
  return *it;
}

template <typename T>
T get_as(const json& value, const std::string& where) {
  try {
    return value.get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, kModule, where + ": " + e.what());
  }
}

double get_number(const json& value, const std::string& where) {
  if (!value.is_number()) throw Error(ErrorKind::Parse, kModule, where + ": expected a number");
  return value.get<double>();
}

int get_int(const json& value, const std::string& where) {
  if (!value.is_number_integer()) throw Error(ErrorKind::Parse, kModule, where + ": expected an integer");
  return value.get<int>();
}

}  // namespace

std::size_t Scene::active_count() const {
  return static_cast<std::size_t>(
      std::count_if(regions.begin(), regions.end(), [](const RegionAnnotation& r) { return r.is_active(); }));
}

void validate(const BoundingBox& box, std::string_view where) {
  const std::string w(where);
  const std::pair<const char*, double> coords[] = {{"x0", box.x0}, {"y0", box.y0}, {"x1", box.x1}, {"y1", box.y1}};
  for (const auto& [name, value] : coords) {
    if (!in_unit(value)) invariant(w + ": " + name + " = " + fmt_double(value) + " outside [0,1]");
  }
  if (box.x1 < box.x0) {
    invariant(w + ": x1 < x0 (x0 = " + fmt_double(box.x0) + ", x1 = " + fmt_double(box.x1) + ")");
  }
  if (box.y1 < box.y0) {
    invariant(w + ": y1 < y0 (y0 = " + fmt_double(box.y0) + ", y1 = " + fmt_double(box.y1) + ")");
  }
  if (!in_unit(box.confidence)) {
    invariant(w + ": confidence = " + fmt_double(box.confidence) + " outside [0,1]");
  }
}

void validate(const RegionAnnotation& region, std::string_view where) {
  const std::string w(where);
  validate(region.box, w + ".box");
  if (region.token_count < 0) {
    invariant(w + ": token_count = " + std::to_string(region.token_count) + " is negative");
  }
  if (region.token_count == 0 && !region.is_padding()) {
    invariant(w + ": token_count = 0 is only allowed for padding slots (zero box, empty caption)");
  }
}

void validate(const Scene& scene) {
  if (scene.image_width < 1) invariant("image_width = " + std::to_string(scene.image_width) + " must be >= 1");
  if (scene.image_height < 1) invariant("image_height = " + std::to_string(scene.image_height) + " must be >= 1");
  bool seen_padding = false;
  for (std::size_t i = 0; i < scene.regions.size(); ++i) {
    const std::string where = "regions[" + std::to_string(i) + "]";
    validate(scene.regions[i], where);
    if (scene.regions[i].is_padding()) {
      seen_padding = true;
    } else if (seen_padding) {
      invariant(where + ": active region follows a padding slot");
    }
  }
}

Scene parse_scene_json(std::string_view text, std::string_view origin) {
  const std::string where(origin);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, kModule, where + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::Parse, kModule, where + ": top level must be an object");

  Scene scene;
  scene.source_id = get_as<std::string>(require(doc, "source_id", where), where + ".source_id");
  scene.image_width = get_int(require(doc, "image_width", where), where + ".image_width");
  scene.image_height = get_int(require(doc, "image_height", where), where + ".image_height");
  scene.global_caption = get_as<std::string>(require(doc, "global_caption", where), where + ".global_caption");

  const json& regions = require(doc, "regions", where);
  if (!regions.is_array()) throw Error(ErrorKind::Parse, kModule, where + ".regions: expected an array");
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const std::string rw = where + ".regions[" + std::to_string(i) + "]";
    const json& r = regions[i];
    if (!r.is_object()) throw Error(ErrorKind::Parse, kModule, rw + ": expected an object");
    const json& box = require(r, "box", rw);
    if (!box.is_array() || box.size() != 4) {
      throw Error(ErrorKind::Parse, kModule, rw + ".box: expected [x0, y0, x1, y1]");
    }
    RegionAnnotation region;
    region.box.x0 = get_number(box[0], rw + ".box[0]");
    region.box.y0 = get_number(box[1], rw + ".box[1]");
    region.box.x1 = get_number(box[2], rw + ".box[2]");
    region.box.y1 = get_number(box[3], rw + ".box[3]");
    region.box.confidence = get_number(require(r, "confidence", rw), rw + ".confidence");
    region.caption = get_as<std::string>(require(r, "caption", rw), rw + ".caption");
    region.token_count = get_int(require(r, "token_count", rw), rw + ".token_count");
    scene.regions.push_back(std::move(region));
  }
  validate(scene);
  return scene;
}

std::string scene_to_json(const Scene& scene) {
  validate(scene);
  json doc;
  doc["source_id"] = scene.source_id;
  doc["image_width"] = scene.image_width;
  doc["image_height"] = scene.image_height;
  doc["global_caption"] = scene.global_caption;
  doc["regions"] = json::array();
  for (const auto& r : scene.regions) {
    doc["regions"].push_back({{"box", {r.box.x0, r.box.y0, r.box.x1, r.box.y1}},
                              {"confidence", r.box.confidence},
                              {"caption", r.caption},
                              {"token_count", r.token_count}});
  }
  try {
    return doc.dump(2) + "\n";
  } catch (const json::type_error& e) {
    // invalid UTF-8 in a caption
    throw Error(ErrorKind::Invariant, kModule, std::string("cannot serialize scene: ") + e.what());
  }
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, kModule, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scene_json(buf.str(), path.string());
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
  const std::string text = scene_to_json(scene);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, kModule, "cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw Error(ErrorKind::Io, kModule, "write failed: " + path.string());
}

int declared_token_count(std::string_view caption, int max_tokens) {
  int words = 0;
  bool in_word = false;
  for (unsigned char c : caption) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r';
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return std::min(words, max_tokens);
}

}  // namespace ragsr
