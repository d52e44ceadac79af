#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ragsr/scene.hpp"

namespace ragsr {

// Opaque handle to an input image. Only identity and dimensions are used;
// pixel decoding is left to the remote service.
struct ImageRef {
  std::string source_id;
  int width = 0;
  int height = 0;
  std::filesystem::path path;
};

class DetectorClient {
 public:
  virtual ~DetectorClient() = default;
  // Raw candidate boxes with confidences, unfiltered.
  virtual std::vector<BoundingBox> detect(const ImageRef& image) const = 0;
};

class CaptionerClient {
 public:
  virtual ~CaptionerClient() = default;
  // No box: global caption. With a box: caption for that region.
  virtual std::string caption(const ImageRef& image, const std::optional<BoundingBox>& box) const = 0;
};

inline std::vector<BoundingBox> detect(const ImageRef& image, const DetectorClient& client) {
  return client.detect(image);
}

inline std::string caption(const ImageRef& image, const std::optional<BoundingBox>& box,
                           const CaptionerClient& client) {
  return client.caption(image, box);
}

// Replays recordings from `<dir>/<source_id>.json`:
//   { "detections": [ {"box": [x0,y0,x1,y1], "confidence": c}, ... ],
//     "global_caption": "...",
//     "region_captions": ["caption for detection 0", ...] }
// Region captions are keyed by (source_id, index of the detection whose box
// equals the query box).
class MockDetector final : public DetectorClient {
 public:
  explicit MockDetector(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::vector<BoundingBox> detect(const ImageRef& image) const override;

 private:
  std::filesystem::path dir_;
};

class MockCaptioner final : public CaptionerClient {
 public:
  explicit MockCaptioner(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::string caption(const ImageRef& image, const std::optional<BoundingBox>& box) const override;

 private:
  std::filesystem::path dir_;
};

struct HttpClientConfig {
  std::string endpoint;          // e.g. "http://127.0.0.1:8080"
  double timeout_seconds = 30.0;
  std::string token_env_var;     // name of env var holding a bearer token; empty for none
};

// JSON-over-HTTP clients.
//   POST /detect  {"source_id","width","height"}         -> {"boxes": [{"box": [...], "confidence": c}]}
//   POST /caption {"source_id","width","height"[,"box"]} -> {"caption": "..."}
class HttpDetector final : public DetectorClient {
 public:
  explicit HttpDetector(HttpClientConfig cfg) : cfg_(std::move(cfg)) {}
  std::vector<BoundingBox> detect(const ImageRef& image) const override;

 private:
  HttpClientConfig cfg_;
};

class HttpCaptioner final : public CaptionerClient {
 public:
  explicit HttpCaptioner(HttpClientConfig cfg) : cfg_(std::move(cfg)) {}
  // An empty or missing caption is returned as "" with a warning on stderr.
  std::string caption(const ImageRef& image, const std::optional<BoundingBox>& box) const override;

 private:
  HttpClientConfig cfg_;
};

}  // namespace ragsr
