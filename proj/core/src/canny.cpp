#include "markerlens/canny.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace markerlens {
namespace {

constexpr double kSmoothingSigma = 1.0;

// Four direction bins and the pixel offsets they compare against. Angles
// are of the gradient vector in raster coordinates (y down), folded into
// [0, 180): 0deg compares E-W, 45deg SE-NW, 90deg S-N, 135deg SW-NE.
struct BinOffset {
  int fx, fy;  // forward
  int bx, by;  // backward
};
constexpr BinOffset kBinOffsets[4] = {
    {1, 0, -1, 0},
    {1, 1, -1, -1},
    {0, 1, 0, -1},
    {-1, 1, 1, -1},
};

int quantize_direction(double gx, double gy) {
  // Angle of the gradient, folded into [0, 180).
  double deg = std::atan2(gy, gx) * 180.0 / 3.14159265358979323846;
  if (deg < 0.0) deg += 180.0;
  if (deg >= 180.0) deg -= 180.0;
  if (deg < 22.5 || deg >= 157.5) return 0;
  if (deg < 67.5) return 1;
  if (deg < 112.5) return 2;
  return 3;
}

}  // namespace

BinaryImage canny(const ImageGray& img, double low, double high) {
  if (!(low > 0.0) || !(low < high)) {
    throw Error(Errc::invalid_thresholds, "require 0 < low < high");
  }

  const int w = img.width;
  const int h = img.height;

  // Gaussian smoothing with edge replication, kept in doubles so the Sobel
  // stage sees the full sub-level gradient ramp.
  const Kernel kernel = gaussian_kernel(kSmoothingSigma);
  std::vector<double> smooth(static_cast<std::size_t>(w) * h, 0.0);
  {
    const int r = kernel.radius;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int dy = -r; dy <= r; ++dy) {
          const int sy = std::clamp(y + dy, 0, h - 1);
          const std::uint8_t* row = img.data.data() + static_cast<std::size_t>(sy) * w;
          const double* wrow = kernel.weights.data() +
                               static_cast<std::size_t>(dy + r) * kernel.side();
          for (int dx = -r; dx <= r; ++dx) {
            acc += wrow[dx + r] * row[std::clamp(x + dx, 0, w - 1)];
          }
        }
        smooth[static_cast<std::size_t>(y) * w + x] = acc;
      }
    }
  }

  std::vector<double> mag(static_cast<std::size_t>(w) * h, 0.0);
  std::vector<std::uint8_t> dir(static_cast<std::size_t>(w) * h, 0);
  auto px = [&](int x, int y) -> double {
    x = x < 0 ? 0 : (x >= w ? w - 1 : x);
    y = y < 0 ? 0 : (y >= h ? h - 1 : y);
    return smooth[static_cast<std::size_t>(y) * w + x];
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
      const double gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      mag[i] = std::hypot(gx, gy);
      dir[i] = static_cast<std::uint8_t>(quantize_direction(gx, gy));
    }
  }

  // Non-maximum suppression. Strict against the backward neighbor and
  // non-strict against the forward one, so a plateau of two tied pixels
  // keeps exactly one.
  std::vector<double> thin(static_cast<std::size_t>(w) * h, 0.0);
  auto mag_at = [&](int x, int y) -> double {
    if (x < 0 || x >= w || y < 0 || y >= h) return 0.0;
    return mag[static_cast<std::size_t>(y) * w + x];
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const BinOffset o = kBinOffsets[dir[i]];
      const double m = mag[i];
      if (m > mag_at(x + o.fx, y + o.fy) && m >= mag_at(x + o.bx, y + o.by)) {
        thin[i] = m;
      }
    }
  }

  // Hysteresis: seed from strong pixels, grow through weak 8-neighbors.
  BinaryImage out(w, h, 0);
  std::vector<std::size_t> stack;
  stack.reserve(256);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (thin[i] >= high && out.data[i] == 0) {
        out.data[i] = 255;
        stack.push_back(i);
        while (!stack.empty()) {
          const std::size_t j = stack.back();
          stack.pop_back();
          const int cx = static_cast<int>(j % w);
          const int cy = static_cast<int>(j / w);
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const int nx = cx + dx;
              const int ny = cy + dy;
              if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
              const std::size_t n = static_cast<std::size_t>(ny) * w + nx;
              if (out.data[n] == 0 && thin[n] >= low) {
                out.data[n] = 255;
                stack.push_back(n);
              }
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace markerlens
