#include "ragsr/clients.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "ragsr/error.hpp"

namespace ragsr {
namespace {

using nlohmann::json;

constexpr const char* kModule = "scene_io";

json read_recording(const std::filesystem::path& dir, const std::string& source_id) {
  const auto path = dir / (source_id + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::NoRecording, kModule, "no recording for '" + source_id + "' at " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, kModule, path.string() + ": " + e.what());
  }
}

BoundingBox box_from_json(const json& entry, const std::string& where) {
  try {
    const json& coords = entry.at("box");
    if (!coords.is_array() || coords.size() != 4) {
      throw Error(ErrorKind::Parse, kModule, where + ": box must be [x0, y0, x1, y1]");
    }
    BoundingBox box{coords[0].get<double>(), coords[1].get<double>(), coords[2].get<double>(),
                    coords[3].get<double>(), entry.at("confidence").get<double>()};
    validate(box, where);
    return box;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, kModule, where + ": " + e.what());
  }
}

std::vector<BoundingBox> boxes_from_json(const json& array, const std::string& where) {
  if (!array.is_array()) throw Error(ErrorKind::Parse, kModule, where + ": expected an array of boxes");
  std::vector<BoundingBox> boxes;
  boxes.reserve(array.size());
  for (std::size_t i = 0; i < array.size(); ++i) {
    boxes.push_back(box_from_json(array[i], where + "[" + std::to_string(i) + "]"));
  }
  return boxes;
}

json request_body(const ImageRef& image, const std::optional<BoundingBox>& box) {
  json body{{"source_id", image.source_id}, {"width", image.width}, {"height", image.height}};
  if (box) {
    body["box"] = {box->x0, box->y0, box->x1, box->y1};
    body["confidence"] = box->confidence;
  }
  return body;
}

json post_json(const HttpClientConfig& cfg, const std::string& route, const json& body) {
  httplib::Client client(cfg.endpoint);
  const double whole = std::floor(cfg.timeout_seconds);
  const auto sec = static_cast<time_t>(whole);
  const auto usec = static_cast<time_t>((cfg.timeout_seconds - whole) * 1e6);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
  if (!cfg.token_env_var.empty()) {
    if (const char* token = std::getenv(cfg.token_env_var.c_str())) client.set_bearer_token_auth(token);
  }

  auto res = client.Post(route, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorKind::Transport, kModule,
                "transport error contacting " + cfg.endpoint + route + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorKind::Transport, kModule,
                cfg.endpoint + route + " returned HTTP " + std::to_string(res->status));
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, kModule, "malformed response from " + cfg.endpoint + route + ": " + e.what());
  }
}

}  // namespace

std::vector<BoundingBox> MockDetector::detect(const ImageRef& image) const {
  const json rec = read_recording(dir_, image.source_id);
  auto it = rec.find("detections");
  if (it == rec.end()) {
    throw Error(ErrorKind::NoRecording, kModule, "no detections recorded for '" + image.source_id + "'");
  }
  return boxes_from_json(*it, image.source_id + ".detections");
}

std::string MockCaptioner::caption(const ImageRef& image, const std::optional<BoundingBox>& box) const {
  const json rec = read_recording(dir_, image.source_id);
  if (!box) {
    auto it = rec.find("global_caption");
    if (it == rec.end() || !it->is_string()) {
      throw Error(ErrorKind::NoRecording, kModule, "no global caption recorded for '" + image.source_id + "'");
    }
    return it->get<std::string>();
  }

  auto dets = rec.find("detections");
  auto caps = rec.find("region_captions");
  if (dets != rec.end() && caps != rec.end() && caps->is_array()) {
    const auto boxes = boxes_from_json(*dets, image.source_id + ".detections");
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (boxes[i] == *box && i < caps->size() && (*caps)[i].is_string()) {
        return (*caps)[i].get<std::string>();
      }
    }
  }
  throw Error(ErrorKind::NoRecording, kModule, "no region caption recorded for '" + image.source_id + "' box [" +
                                                   std::to_string(box->x0) + ", " + std::to_string(box->y0) + ", " +
                                                   std::to_string(box->x1) + ", " + std::to_string(box->y1) + "]");
}

std::vector<BoundingBox> HttpDetector::detect(const ImageRef& image) const {
  const json res = post_json(cfg_, "/detect", request_body(image, std::nullopt));
  auto it = res.find("boxes");
  if (it == res.end()) {
    throw Error(ErrorKind::Parse, kModule, "malformed response from " + cfg_.endpoint + "/detect: missing 'boxes'");
  }
  return boxes_from_json(*it, cfg_.endpoint + "/detect.boxes");
}

std::string HttpCaptioner::caption(const ImageRef& image, const std::optional<BoundingBox>& box) const {
  const json res = post_json(cfg_, "/caption", request_body(image, box));
  auto it = res.find("caption");
  if (it != res.end() && !it->is_null() && !it->is_string()) {
    throw Error(ErrorKind::Parse, kModule, "malformed response from " + cfg_.endpoint + "/caption: caption is not a string");
  }
  std::string text = (it == res.end() || it->is_null()) ? std::string{} : it->get<std::string>();
  if (text.empty()) {
    std::cerr << "warning: empty caption from " << cfg_.endpoint << " for '" << image.source_id << "'\n";
  }
  return text;
}

}  // namespace ragsr
