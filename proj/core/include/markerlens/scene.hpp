#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "markerlens/dataset.hpp"
#include "markerlens/image.hpp"

namespace markerlens {

// Background families standing in for the capture conditions the camera
// would see. `noise` draws per-pixel uniform values in level +/- 25 from its
// own seed; everything else is deterministic from the fields alone.
struct Background {
  enum class Kind { flat, gradient, noise, checker };

  Kind kind = Kind::flat;
  double level = 200.0;              // flat, noise
  double grad_a = 150.0, grad_b = 230.0;
  std::uint64_t seed = 0;            // noise
  int cell = 32;                     // checker
  double lo = 160.0, hi = 220.0;     // checker

  static Background flat(double level);
  static Background gradient(double a, double b);
  static Background noise(double level, std::uint64_t seed);
  static Background checker(int cell, double lo, double hi);

  double value_at(int x, int y, int width, int height) const;
  double min_level() const;
};

// A single marker scene. The marker is a dark rectangle whose long axis
// points along theta_deg (counterclockwise-positive, visual orientation),
// reaching from arm_offset to arm_offset + marker_len away from the pivot.
struct SceneSpec {
  int img_size = 256;  // square
  Vec2 pivot{128.0, 128.0};
  double arm_offset = 7.68;
  double marker_len = 107.52;
  double marker_wid = 25.6;
  double theta_deg = 0.0;
  int marker_gray = 60;
  Background background = Background::flat(200.0);
  double noise_sigma = 0.0;        // additive Gaussian, applied once
  std::uint64_t noise_seed = 0;

  // Canonical scene for a given resolution: centered pivot, marker geometry
  // scaled so that every angle in [-90, 90] stays in frame with headroom for
  // the +/-10% batch jitter.
  static SceneSpec defaults(int img_size);

  void validate() const;  // marker_out_of_bounds / invalid_scene
};

// Angular travel during the exposure, emulated by averaging sub-exposures.
struct BlurSpec {
  double sweep_deg = 0.0;
  int k_sub = 16;
};

struct RenderResult {
  ImageRGB image;
  double truth_deg = 0.0;
};

// Antialiased render (4x4 supersampling) with exact ground truth.
RenderResult render_scene(const SceneSpec& spec);

// Mean of k_sub sharp renders at angles evenly spaced across
// [theta - sweep/2, theta + sweep/2] (midpoint spacing, so k_sub = 1 and
// sweep 0 reduce to the sharp render). Truth is the center angle.
RenderResult render_motion_blur(const SceneSpec& spec, const BlurSpec& blur);

// Renders count_per_angle frames per integer angle in [angle_min, angle_max],
// cycling backgrounds per frame (the background index becomes the batch id)
// and jittering pivot/arm geometry by up to 10% from the seed. Writes PNGs
// plus <out_dir>/manifest.csv and returns the manifest, ordered by
// (angle, index).
DatasetManifest generate_batch(int count_per_angle, int angle_min, int angle_max,
                               const std::vector<Background>& backgrounds,
                               const std::optional<BlurSpec>& blur,
                               const std::string& out_dir, std::uint64_t seed,
                               const SceneSpec& proto = SceneSpec::defaults(256));

}  // namespace markerlens
