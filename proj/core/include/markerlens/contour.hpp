#pragma once

#include <vector>

#include "markerlens/geometry.hpp"
#include "markerlens/image.hpp"

namespace markerlens {

struct PixelCoord {
  int x = 0;
  int y = 0;
  bool operator==(const PixelCoord&) const = default;
};

enum class ContourKind { outer, hole };

// Closed 8-connected border in traversal order.
struct Contour {
  std::vector<PixelCoord> points;
  ContourKind kind = ContourKind::outer;

  double perimeter() const;
  Polygon to_polygon() const;
};

// Suzuki-Abe border following over the 255-valued foreground with
// 8-connectivity. Returns every outer border and hole border, discovered in
// raster order (top-to-bottom, left-to-right).
std::vector<Contour> trace_contours(const BinaryImage& img);

}  // namespace markerlens
