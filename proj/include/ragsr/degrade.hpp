#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace ragsr {

struct ImageBuffer {
  int width = 0;
  int height = 0;
  int channels = 1;          // 1 (gray) or 3 (RGB, interleaved)
  std::vector<double> data;  // row-major, intensities in [0, 1]

  ImageBuffer() = default;
  ImageBuffer(int width, int height, int channels, double fill = 0.0);

  double& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  double at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

void validate(const ImageBuffer& img);

// Single-order synthetic degradation: blur -> area downsample -> noise -> quantize.
struct DegradeConfig {
  int scale = 4;
  double blur_sigma = 1.2;
  double noise_sigma = 0.02;
  bool quantize = true;
  std::uint64_t seed = 0;
};

// Separable Gaussian, radius ceil(3 sigma), half-sample symmetric borders.
// sigma == 0 returns the input unchanged.
ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma);
// Mean over scale x scale blocks; output is floor(dim / scale).
ImageBuffer area_downsample(const ImageBuffer& img, int scale);
ImageBuffer upsample_nearest(const ImageBuffer& img, int scale);

ImageBuffer degrade(const ImageBuffer& hr, const DegradeConfig& cfg = {});

// 10 log10(1 / MSE) for intensities on [0, 1]; identical images give 100 dB.
double psnr(const ImageBuffer& a, const ImageBuffer& b);
inline constexpr double kPsnrCap = 100.0;

// Binary PGM (P5) / PPM (P6), maxval 255.
ImageBuffer read_pnm(const std::filesystem::path& path);
void write_pnm(const ImageBuffer& img, const std::filesystem::path& path);

}  // namespace ragsr
