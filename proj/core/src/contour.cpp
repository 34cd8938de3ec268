#include "markerlens/contour.hpp"

#include <cmath>
#include <cstdint>

namespace markerlens {

double Contour::perimeter() const {
  const std::size_t n = points.size();
  if (n < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const PixelCoord a = points[i];
    const PixelCoord b = points[(i + 1) % n];
    sum += std::hypot(double(a.x - b.x), double(a.y - b.y));
  }
  return sum;
}

Polygon Contour::to_polygon() const {
  Polygon p;
  p.vertices.reserve(points.size());
  for (const PixelCoord& pt : points) {
    p.vertices.push_back({double(pt.x), double(pt.y)});
  }
  return p;
}

namespace {

// 8-neighborhood indexed clockwise on a y-down raster, starting east.
constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

int direction_between(int from_x, int from_y, int to_x, int to_y) {
  const int dx = to_x - from_x;
  const int dy = to_y - from_y;
  for (int d = 0; d < 8; ++d) {
    if (kDx[d] == dx && kDy[d] == dy) return d;
  }
  return 0;  // unreachable for 8-adjacent pairs
}

}  // namespace

std::vector<Contour> trace_contours(const BinaryImage& img) {
  std::vector<Contour> contours;
  if (img.width <= 0 || img.height <= 0) return contours;

  // Zero-padded label map so border following never leaves the array.
  // 1 = unvisited foreground; |v| > 1 = visited border pixel, with the sign
  // recording whether the pixel closes its region to the east.
  const int pw = img.width + 2;
  const int ph = img.height + 2;
  std::vector<std::int32_t> f(static_cast<std::size_t>(pw) * ph, 0);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (img.at(x, y) != 0) {
        f[static_cast<std::size_t>(y + 1) * pw + (x + 1)] = 1;
      }
    }
  }
  auto at = [&](int x, int y) -> std::int32_t& {
    return f[static_cast<std::size_t>(y) * pw + x];
  };

  std::int32_t nbd = 1;
  for (int y = 1; y <= img.height; ++y) {
    for (int x = 1; x <= img.width; ++x) {
      const std::int32_t v = at(x, y);
      if (v == 0) continue;

      ContourKind kind;
      int probe_dir;
      if (v == 1 && at(x - 1, y) == 0) {
        kind = ContourKind::outer;
        probe_dir = 4;  // background sits west
      } else if (v >= 1 && at(x + 1, y) == 0) {
        kind = ContourKind::hole;
        probe_dir = 0;  // hole sits east
      } else {
        continue;
      }
      ++nbd;

      Contour contour;
      contour.kind = kind;

      // Clockwise scan from the probe for the first border neighbor; none
      // means a single-pixel border.
      int start_dir = -1;
      for (int k = 0; k < 8; ++k) {
        const int d = (probe_dir + k) % 8;
        if (at(x + kDx[d], y + kDy[d]) != 0) {
          start_dir = d;
          break;
        }
      }
      if (start_dir < 0) {
        at(x, y) = -nbd;
        contour.points.push_back({x - 1, y - 1});
        contours.push_back(std::move(contour));
        continue;
      }

      const int first_x = x + kDx[start_dir];
      const int first_y = y + kDy[start_dir];
      int prev_x = first_x, prev_y = first_y;
      int cur_x = x, cur_y = y;

      while (true) {
        // Counterclockwise sweep around `cur`, starting just past `prev`.
        const int back = direction_between(cur_x, cur_y, prev_x, prev_y);
        int next_dir = back;  // k == 8 backtracks along a one-pixel spur
        bool east_seen_zero = false;
        for (int k = 1; k <= 8; ++k) {
          const int d = (back - k + 16) % 8;
          if (at(cur_x + kDx[d], cur_y + kDy[d]) != 0) {
            next_dir = d;
            break;
          }
          if (d == 0) east_seen_zero = true;
        }

        contour.points.push_back({cur_x - 1, cur_y - 1});
        if (east_seen_zero) {
          at(cur_x, cur_y) = -nbd;
        } else if (at(cur_x, cur_y) == 1) {
          at(cur_x, cur_y) = nbd;
        }

        const int nx = cur_x + kDx[next_dir];
        const int ny = cur_y + kDy[next_dir];
        // Closure: about to re-enter the start the same way the trace left it.
        if (nx == x && ny == y && cur_x == first_x && cur_y == first_y) {
          break;
        }
        prev_x = cur_x;
        prev_y = cur_y;
        cur_x = nx;
        cur_y = ny;
      }
      contours.push_back(std::move(contour));
    }
  }
  return contours;
}

}  // namespace markerlens
