#pragma once

#include <string>
#include <vector>

#include "markerlens/canny.hpp"
#include "markerlens/contour.hpp"
#include "markerlens/geometry.hpp"
#include "markerlens/image.hpp"

namespace markerlens {

enum class ContourSource { edges, threshold };

// Hand-tuned knobs of the heuristic pipeline. Defaults were tuned on the
// synthetic set and span image sizes because epsilon and the area band are
// fractions, not pixels.
struct PipelineConfig {
  int threshold = 100;
  double canny_low = 50.0;
  double canny_high = 150.0;
  double dp_epsilon_frac = 0.02;   // fraction of contour perimeter
  double min_area_frac = 0.005;    // fraction of image area
  double max_area_frac = 0.5;
  ContourSource contour_source = ContourSource::edges;

  void validate() const;  // throws parse_error on a broken invariant
};

// Plain-text `key = value` config file; every key optional, unknown keys
// rejected, '#' starts a comment.
PipelineConfig load_pipeline_config(const std::string& path);
void save_pipeline_config(const PipelineConfig& cfg, const std::string& path);

// invert=true (the default; the marker is dark): pixel <= t becomes 255.
// invert=false: pixel > t becomes 255.
BinaryImage binary_threshold(const ImageGray& img, int t, bool invert = true);

// Keeps 4-vertex simple polygons whose area lies inside the config band and
// returns the largest. Throws detection_failed when nothing survives - the
// documented failure mode on blurred frames.
Quad select_marker(const std::vector<Polygon>& polys, double img_area,
                   const PipelineConfig& cfg);

// The full heuristic chain: grayscale, threshold, optional Canny, contour
// tracing, per-contour simplification with epsilon = dp_epsilon_frac *
// perimeter, marker selection, short-side midpoints, angle.
AngleEstimate run_baseline(const ImageRGB& img, const PipelineConfig& cfg);

}  // namespace markerlens
