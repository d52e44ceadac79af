#include "ragsr/degrade.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "ragsr/error.hpp"
#include "ragsr/rng.hpp"

namespace ragsr {
namespace {

constexpr const char* kModule = "lr_degrade";

// Periodic mirror index: ... 1 0 | 0 1 ... n-1 | n-1 n-2 ...
int reflect(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, int channels, double fill)
    : width(width), height(height), channels(channels),
      data(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0) * std::max(channels, 0), fill) {}

void validate(const ImageBuffer& img) {
  if (img.width < 1 || img.height < 1) throw Error(ErrorKind::Shape, kModule, "image dimensions must be >= 1");
  if (img.channels != 1 && img.channels != 3) throw Error(ErrorKind::Shape, kModule, "channels must be 1 or 3");
  if (img.data.size() != static_cast<std::size_t>(img.width) * img.height * img.channels) {
    throw Error(ErrorKind::Shape, kModule, "data length does not match width x height x channels");
  }
  for (double v : img.data) {
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, kModule, "non-finite pixel value");
  }
}

ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma) {
  validate(img);
  if (!(sigma >= 0.0)) throw Error(ErrorKind::Config, kModule, "blur_sigma must be >= 0");
  if (sigma == 0.0) return img;
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);

  ImageBuffer tmp(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * img.at(reflect(x + i, img.width), y, c);
        tmp.at(x, y, c) = acc;
      }

  ImageBuffer out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp.at(x, reflect(y + i, img.height), c);
        out.at(x, y, c) = acc;
      }
  return out;
}

ImageBuffer area_downsample(const ImageBuffer& img, int scale) {
  validate(img);
  if (scale < 1) throw Error(ErrorKind::Config, kModule, "scale must be >= 1");
  if (img.width < scale || img.height < scale) {
    throw Error(ErrorKind::Shape, kModule,
                "image " + std::to_string(img.width) + "x" + std::to_string(img.height) + " is smaller than scale " +
                    std::to_string(scale));
  }
  if (scale == 1) return img;
  ImageBuffer out(img.width / scale, img.height / scale, img.channels);
  const double inv = 1.0 / (static_cast<double>(scale) * scale);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int dy = 0; dy < scale; ++dy)
          for (int dx = 0; dx < scale; ++dx) acc += img.at(x * scale + dx, y * scale + dy, c);
        out.at(x, y, c) = acc * inv;
      }
  return out;
}

ImageBuffer upsample_nearest(const ImageBuffer& img, int scale) {
  validate(img);
  if (scale < 1) throw Error(ErrorKind::Config, kModule, "scale must be >= 1");
  ImageBuffer out(img.width * scale, img.height * scale, img.channels);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(x / scale, y / scale, c);
  return out;
}

ImageBuffer degrade(const ImageBuffer& hr, const DegradeConfig& cfg) {
  validate(hr);
  if (cfg.scale < 1) throw Error(ErrorKind::Config, kModule, "scale must be >= 1");
  if (!(cfg.blur_sigma >= 0.0) || !(cfg.noise_sigma >= 0.0)) {
    throw Error(ErrorKind::Config, kModule, "blur_sigma and noise_sigma must be >= 0");
  }
  if (hr.width < cfg.scale || hr.height < cfg.scale) {
    throw Error(ErrorKind::Shape, kModule,
                "image " + std::to_string(hr.width) + "x" + std::to_string(hr.height) + " is smaller than scale " +
                    std::to_string(cfg.scale));
  }

  ImageBuffer lr = area_downsample(gaussian_blur(hr, cfg.blur_sigma), cfg.scale);
  if (cfg.noise_sigma > 0.0) {
    Rng rng(cfg.seed);
    for (double& v : lr.data) v = std::clamp(v + rng.normal(0.0, cfg.noise_sigma), 0.0, 1.0);
  }
  if (cfg.quantize) {
    for (double& v : lr.data) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  }
  return lr;
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  validate(a);
  validate(b);
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw Error(ErrorKind::Shape, kModule,
                "psnr of " + std::to_string(a.width) + "x" + std::to_string(a.height) + "x" +
                    std::to_string(a.channels) + " and " + std::to_string(b.width) + "x" +
                    std::to_string(b.height) + "x" + std::to_string(b.channels));
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(a.data.size());
  if (mse == 0.0) return kPsnrCap;
  return 10.0 * std::log10(1.0 / mse);
}

ImageBuffer read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, kModule, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  auto bad = [&](const std::string& why) -> Error {
    return Error(ErrorKind::Parse, kModule, path.string() + ": " + why);
  };
  auto skip_ws = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_ws();
    if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) throw bad("malformed header");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > 1 << 24) throw bad("header value too large");
    }
    return static_cast<int>(v);
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw bad("not a binary PGM/PPM (expected P5 or P6)");
  }
  const int channels = bytes[1] == '5' ? 1 : 3;
  pos = 2;
  const int width = read_int();
  const int height = read_int();
  const int maxval = read_int();
  if (width < 1 || height < 1) throw bad("dimensions must be >= 1");
  if (maxval != 255) throw bad("only maxval 255 is supported");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) throw bad("malformed header");
  ++pos;

  ImageBuffer img(width, height, channels);
  if (bytes.size() - pos < img.data.size()) throw bad("truncated pixel data");
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    img.data[i] = static_cast<unsigned char>(bytes[pos + i]) / 255.0;
  }
  return img;
}

void write_pnm(const ImageBuffer& img, const std::filesystem::path& path) {
  validate(img);
  std::string bytes = std::string(img.channels == 1 ? "P5" : "P6") + "\n" + std::to_string(img.width) + " " +
                      std::to_string(img.height) + "\n255\n";
  bytes.reserve(bytes.size() + img.data.size());
  for (double v : img.data) {
    bytes.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, kModule, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, kModule, "write failed: " + path.string());
}

}  // namespace ragsr
