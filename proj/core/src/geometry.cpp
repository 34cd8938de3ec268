#include "markerlens/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace markerlens {

double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 a) { return std::hypot(a.x, a.y); }
double distance(Vec2 a, Vec2 b) { return norm(a - b); }

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

namespace {

// Proper or touching intersection of segments [a,b] and [c,d].
bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double d1 = cross(d - c, a - c);
  const double d2 = cross(d - c, b - c);
  const double d3 = cross(b - a, c - a);
  const double d4 = cross(b - a, d - a);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  auto on_segment = [](Vec2 p, Vec2 q, Vec2 r) {
    return std::min(p.x, r.x) <= q.x && q.x <= std::max(p.x, r.x) &&
           std::min(p.y, r.y) <= q.y && q.y <= std::max(p.y, r.y);
  };
  if (d1 == 0 && on_segment(c, a, d)) return true;
  if (d2 == 0 && on_segment(c, b, d)) return true;
  if (d3 == 0 && on_segment(a, c, b)) return true;
  if (d4 == 0 && on_segment(a, d, b)) return true;
  return false;
}

}  // namespace

bool Quad::is_simple(const std::array<Vec2, 4>& v) {
  for (int i = 0; i < 4; ++i) {
    if (v[i] == v[(i + 1) % 4]) return false;
  }
  // Only the two non-adjacent side pairs can cross in a quad.
  if (segments_intersect(v[0], v[1], v[2], v[3])) return false;
  if (segments_intersect(v[1], v[2], v[3], v[0])) return false;
  return true;
}

Quad Quad::from_vertices(const std::array<Vec2, 4>& v) {
  if (!is_simple(v)) {
    throw Error(Errc::degenerate_quad, "quad is self-intersecting or has repeated vertices");
  }
  return Quad{v};
}

double polygon_area(const Polygon& p) {
  const std::size_t n = p.vertices.size();
  if (n < 3) {
    throw Error(Errc::too_few_vertices, "polygon area needs >= 3 vertices");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = p.vertices[i];
    const Vec2 b = p.vertices[(i + 1) % n];
    sum += a.x * b.y - b.x * a.y;
  }
  return std::abs(sum) * 0.5;
}

MidpointPair short_side_midpoints(const Quad& q) {
  constexpr double kTie = 1e-9;
  double len[4];
  for (int i = 0; i < 4; ++i) {
    len[i] = distance(q.vertices[i], q.vertices[(i + 1) % 4]);
    if (len[i] == 0.0) {
      throw Error(Errc::degenerate_quad, "quad side has zero length");
    }
  }

  // Candidate short sides: sort indices by length, stable in index order.
  int order[4] = {0, 1, 2, 3};
  std::stable_sort(order, order + 4, [&](int a, int b) { return len[a] < len[b]; });

  int first = order[0];
  int second = order[1];
  if ((first + second) % 2 != 0) {
    // Adjacent pair; accept the opposite of `first` instead when its length
    // ties the nominal second-shortest.
    const int opposite = (first + 2) % 4;
    if (std::abs(len[opposite] - len[second]) <= kTie) {
      second = opposite;
    } else {
      throw Error(Errc::degenerate_quad, "two shortest quad sides are adjacent");
    }
  }
  if (second < first) std::swap(first, second);

  auto midpoint = [&](int side) {
    return (q.vertices[side] + q.vertices[(side + 1) % 4]) * 0.5;
  };
  return MidpointPair{midpoint(first), midpoint(second)};
}

double estimate_angle(const MidpointPair& m) {
  const double dx = m.p1.x - m.p2.x;
  const double dy = m.p1.y - m.p2.y;
  if (dx == 0.0 && dy == 0.0) {
    throw Error(Errc::coincident_points, "midpoints coincide");
  }
  if (dx == 0.0) return 90.0;

  // Image y grows downward; negate dy for the visual CCW-positive angle.
  double deg = std::atan2(-dy, dx) * 180.0 / std::numbers::pi;
  if (deg > 90.0) deg -= 180.0;
  if (deg <= -90.0) deg += 180.0;
  return deg;
}

}  // namespace markerlens
