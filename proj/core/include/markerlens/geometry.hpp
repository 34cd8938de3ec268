#pragma once

#include <array>
#include <optional>
#include <vector>

#include "markerlens/error.hpp"

namespace markerlens {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2&) const = default;
};

double dot(Vec2 a, Vec2 b);
double cross(Vec2 a, Vec2 b);
double norm(Vec2 a);
double distance(Vec2 a, Vec2 b);

// Distance from p to the segment [a, b].
double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

struct Polygon {
  std::vector<Vec2> vertices;
};

// Four vertices in traversal order. Construction rejects self-intersecting
// or repeated-vertex input.
struct Quad {
  std::array<Vec2, 4> vertices;

  static Quad from_vertices(const std::array<Vec2, 4>& v);
  static bool is_simple(const std::array<Vec2, 4>& v);
};

struct MidpointPair {
  Vec2 p1;
  Vec2 p2;
};

enum class EstimatorMethod { baseline, model };

struct AngleEstimate {
  double theta_deg = 0.0;  // in (-90, 90]
  EstimatorMethod method = EstimatorMethod::baseline;
  std::optional<Quad> quad;  // baseline only: the winning marker quad
};

// Absolute shoelace area. Throws too_few_vertices below 3.
double polygon_area(const Polygon& p);

// Midpoints of the two shortest (necessarily opposite) sides. On a tie
// within 1e-9 the first opposite pair in traversal order wins, so a square
// yields the midpoints of its first and third sides. Throws degenerate_quad
// when a side has zero length or the two shortest sides are adjacent.
MidpointPair short_side_midpoints(const Quad& q);

// Angle of the undirected line through the pair, degrees in (-90, 90],
// counterclockwise-positive in visual orientation (image y points down, so
// dy is negated). Vertical lines give exactly 90.
double estimate_angle(const MidpointPair& m);

}  // namespace markerlens
