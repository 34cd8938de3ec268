#include "markerlens/simplify.hpp"

#include <utility>
#include <vector>

namespace markerlens {
namespace {

// Keeps indices [first, last] of pts; appends kept indices in (first, last]
// to out, assuming `first` is already emitted.
void rdp_recurse(std::span<const Vec2> pts, std::size_t first, std::size_t last,
                 double epsilon, std::vector<std::size_t>& out) {
  if (last <= first + 1) {
    if (last > first) out.push_back(last);
    return;
  }
  double max_dist = -1.0;
  std::size_t split = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    const double d = point_segment_distance(pts[i], pts[first], pts[last]);
    if (d > max_dist) {
      max_dist = d;
      split = i;
    }
  }
  if (max_dist > epsilon) {
    rdp_recurse(pts, first, split, epsilon, out);
    rdp_recurse(pts, split, last, epsilon, out);
  } else {
    out.push_back(last);
  }
}

Polygon simplify_open(std::span<const Vec2> pts, double epsilon) {
  std::vector<std::size_t> kept{0};
  rdp_recurse(pts, 0, pts.size() - 1, epsilon, kept);
  Polygon out;
  out.vertices.reserve(kept.size());
  for (std::size_t i : kept) out.vertices.push_back(pts[i]);
  return out;
}

std::pair<std::size_t, std::size_t> farthest_pair(std::span<const Vec2> pts) {
  std::size_t a = 0, b = 0;
  double best = -1.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const Vec2 d = pts[i] - pts[j];
      const double d2 = dot(d, d);
      if (d2 > best) {
        best = d2;
        a = i;
        b = j;
      }
    }
  }
  return {a, b};
}

Polygon simplify_closed(std::span<const Vec2> pts, double epsilon) {
  const std::size_t n = pts.size();
  const auto [a, b] = farthest_pair(pts);

  // Unroll the ring into the two chains a..b and b..a (wrapping).
  std::vector<Vec2> chain1, chain2;
  chain1.reserve(n);
  chain2.reserve(n);
  for (std::size_t i = a;; i = (i + 1) % n) {
    chain1.push_back(pts[i]);
    if (i == b) break;
  }
  for (std::size_t i = b;; i = (i + 1) % n) {
    chain2.push_back(pts[i]);
    if (i == a) break;
  }

  const Polygon s1 = simplify_open(chain1, epsilon);
  const Polygon s2 = simplify_open(chain2, epsilon);

  // Join, dropping the duplicated split points (s2 starts at b, ends at a).
  Polygon out;
  out.vertices = s1.vertices;
  for (std::size_t i = 1; i + 1 < s2.vertices.size(); ++i) {
    out.vertices.push_back(s2.vertices[i]);
  }
  return out;
}

}  // namespace

Polygon simplify(std::span<const Vec2> points, double epsilon, bool closed) {
  if (epsilon < 0.0) {
    throw Error(Errc::negative_epsilon, "epsilon must be non-negative");
  }
  if (points.size() < 2) {
    throw Error(Errc::too_few_vertices, "simplify needs >= 2 points");
  }

  // Collapse consecutive duplicates so the output honors the Polygon
  // invariant of distinct consecutive vertices.
  std::vector<Vec2> clean;
  clean.reserve(points.size());
  for (const Vec2& p : points) {
    if (clean.empty() || !(clean.back() == p)) clean.push_back(p);
  }
  if (closed && clean.size() > 1 && clean.front() == clean.back()) {
    clean.pop_back();
  }
  if (clean.size() < 2) {
    Polygon out;
    out.vertices = clean;
    return out;
  }

  if (closed && clean.size() >= 3) {
    return simplify_closed(clean, epsilon);
  }
  return simplify_open(clean, epsilon);
}

Polygon simplify(const Contour& c, double epsilon) {
  const Polygon p = c.to_polygon();
  if (p.vertices.size() == 1) {
    return p;  // single-pixel border; nothing to simplify
  }
  return simplify(std::span<const Vec2>(p.vertices), epsilon, /*closed=*/true);
}

Polygon simplify(const Polygon& p, double epsilon, bool closed) {
  return simplify(std::span<const Vec2>(p.vertices), epsilon, closed);
}

}  // namespace markerlens
