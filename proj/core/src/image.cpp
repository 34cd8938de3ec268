#include "markerlens/image.hpp"

#include <algorithm>
#include <cmath>

namespace markerlens {

std::uint8_t quantize_u8(double v) {
  const double r = std::round(v);  // halfway cases away from zero
  if (r <= 0.0) return 0;
  if (r >= 255.0) return 255;
  return static_cast<std::uint8_t>(r);
}

ImageGray to_grayscale(const ImageRGB& img) {
  ImageGray out(img.width, img.height);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = img.data.data() + i * 3;
    out.data[i] = quantize_u8(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
  }
  return out;
}

ImageRGB to_rgb(const ImageGray& img) {
  ImageRGB out(img.width, img.height);
  const std::size_t n = img.data.size();
  for (std::size_t i = 0; i < n; ++i) {
    out.data[i * 3] = out.data[i * 3 + 1] = out.data[i * 3 + 2] = img.data[i];
  }
  return out;
}

ImageGray convolve(const ImageGray& img, const Kernel& k) {
  const int limit = 2 * std::min(img.width, img.height) + 1;
  if (k.side() > limit) {
    throw Error(Errc::kernel_too_large,
                "kernel side " + std::to_string(k.side()) +
                    " exceeds limit " + std::to_string(limit));
  }

  ImageGray out(img.width, img.height);
  const int r = k.radius;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const int sy = std::clamp(y + dy, 0, img.height - 1);
        const std::uint8_t* row = img.data.data() + static_cast<std::size_t>(sy) * img.width;
        const double* wrow = k.weights.data() + static_cast<std::size_t>(dy + r) * k.side();
        for (int dx = -r; dx <= r; ++dx) {
          const int sx = std::clamp(x + dx, 0, img.width - 1);
          acc += wrow[dx + r] * row[sx];
        }
      }
      out.at(x, y) = quantize_u8(acc);
    }
  }
  return out;
}

Kernel gaussian_kernel(double sigma, int radius) {
  if (!(sigma > 0.0)) {
    throw Error(Errc::invalid_sigma, "sigma must be positive");
  }
  if (radius <= 0) {
    radius = static_cast<int>(std::ceil(3.0 * sigma));
    radius = std::max(radius, 1);
  }

  Kernel k;
  k.radius = radius;
  k.weights.resize(static_cast<std::size_t>(k.side()) * k.side());
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  double sum = 0.0;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const double w = std::exp(-(dx * dx + dy * dy) * inv2s2);
      k.weights[static_cast<std::size_t>(dy + radius) * k.side() + (dx + radius)] = w;
      sum += w;
    }
  }
  for (double& w : k.weights) w /= sum;
  return k;
}

ImageGray binary_to_gray(const BinaryImage& img) {
  ImageGray out(img.width, img.height);
  out.data = img.data;
  return out;
}

}  // namespace markerlens
