#pragma once

#include <span>

#include "markerlens/contour.hpp"
#include "markerlens/geometry.hpp"

namespace markerlens {

// Ramer-Douglas-Peucker. Open chains recurse on the endpoints; closed rings
// are first split at the two mutually farthest points. Distances are taken
// to the anchor segment, so every discarded point ends up within epsilon of
// the simplified polyline. Throws negative_epsilon.
Polygon simplify(std::span<const Vec2> points, double epsilon, bool closed);

Polygon simplify(const Contour& c, double epsilon);
Polygon simplify(const Polygon& p, double epsilon, bool closed = false);

}  // namespace markerlens
