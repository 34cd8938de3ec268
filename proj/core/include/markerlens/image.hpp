#pragma once

#include <cstdint>
#include <vector>

#include "markerlens/error.hpp"

namespace markerlens {

// Row-major 8-bit images. All pixel math happens in 64-bit doubles and is
// rounded half-away-from-zero back to [0,255] at the edges of each
// operation; the containers themselves are plain value types.

struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // r,g,b interleaved, width*height*3 bytes

  ImageRGB() = default;
  ImageRGB(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t* pixel(int x, int y) {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  const std::uint8_t* pixel(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  bool operator==(const ImageRGB&) const = default;
};

struct ImageGray {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // width*height bytes

  ImageGray() = default;
  ImageGray(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t& at(int x, int y) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }

  bool operator==(const ImageGray&) const = default;
};

// Values restricted to {0, 255}.
struct BinaryImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  BinaryImage() = default;
  BinaryImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t& at(int x, int y) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }

  bool operator==(const BinaryImage&) const = default;
};

// Square convolution kernel with odd side 2*radius+1.
struct Kernel {
  int radius = 0;
  std::vector<double> weights;  // (2r+1)^2, row-major

  int side() const { return 2 * radius + 1; }
  double at(int dx, int dy) const {
    return weights[static_cast<std::size_t>(dy + radius) * side() + (dx + radius)];
  }
};

// Round half away from zero, clamp to [0,255].
std::uint8_t quantize_u8(double v);

// Rec.601 luma: gray = round(0.299 r + 0.587 g + 0.114 b).
ImageGray to_grayscale(const ImageRGB& img);

// Expand gray to RGB with r=g=b (the inverse lift of to_grayscale).
ImageRGB to_rgb(const ImageGray& img);

// Convolution with edge replication. Accumulates in doubles, then
// quantizes. Throws kernel_too_large when the kernel side exceeds
// 2*min(width,height)+1.
ImageGray convolve(const ImageGray& img, const Kernel& k);

// Normalized Gaussian. radius == 0 means "choose for me": ceil(3*sigma).
Kernel gaussian_kernel(double sigma, int radius = 0);

ImageGray binary_to_gray(const BinaryImage& img);

}  // namespace markerlens
