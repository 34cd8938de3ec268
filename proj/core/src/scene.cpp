#include "markerlens/scene.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "markerlens/image_io.hpp"
#include "markerlens/parallel.hpp"

namespace fs = std::filesystem;

namespace markerlens {

Background Background::flat(double level) {
  Background b;
  b.kind = Kind::flat;
  b.level = level;
  return b;
}

Background Background::gradient(double a, double b2) {
  Background b;
  b.kind = Kind::gradient;
  b.grad_a = a;
  b.grad_b = b2;
  return b;
}

Background Background::noise(double level, std::uint64_t seed) {
  Background b;
  b.kind = Kind::noise;
  b.level = level;
  b.seed = seed;
  return b;
}

Background Background::checker(int cell, double lo, double hi) {
  Background b;
  b.kind = Kind::checker;
  b.cell = cell;
  b.lo = lo;
  b.hi = hi;
  return b;
}

namespace {

constexpr double kNoiseAmplitude = 25.0;

double hash01(std::uint64_t seed, std::uint64_t index) {
  return static_cast<double>(mix_seed(seed, index) >> 11) * 0x1.0p-53;
}

}  // namespace

double Background::value_at(int x, int y, int width, int height) const {
  switch (kind) {
    case Kind::flat:
      return level;
    case Kind::gradient: {
      const double denom = std::max(width + height - 2, 1);
      return grad_a + (grad_b - grad_a) * (x + y) / denom;
    }
    case Kind::noise: {
      const std::uint64_t idx = static_cast<std::uint64_t>(y) * width + x;
      return level + kNoiseAmplitude * (2.0 * hash01(seed, idx) - 1.0);
    }
    case Kind::checker:
      return ((x / cell + y / cell) % 2 == 0) ? lo : hi;
  }
  return level;
}

double Background::min_level() const {
  switch (kind) {
    case Kind::flat: return level;
    case Kind::gradient: return std::min(grad_a, grad_b);
    case Kind::noise: return level - kNoiseAmplitude;
    case Kind::checker: return std::min(lo, hi);
  }
  return level;
}

SceneSpec SceneSpec::defaults(int img_size) {
  SceneSpec s;
  s.img_size = img_size;
  const double size = img_size;
  s.pivot = {size / 2.0, size / 2.0};
  s.arm_offset = 0.03 * size;
  s.marker_len = 0.42 * size;
  s.marker_wid = 0.10 * size;
  return s;
}

void SceneSpec::validate() const {
  if (img_size < 8) throw Error(Errc::invalid_scene, "img_size too small");
  if (marker_len <= 0.0 || marker_wid <= 0.0 || arm_offset < 0.0) {
    throw Error(Errc::invalid_scene, "marker geometry must be positive");
  }
  if (!(theta_deg >= -90.0 && theta_deg <= 90.0)) {
    throw Error(Errc::invalid_scene, "theta outside [-90, 90]");
  }
  if (!(marker_gray >= 0 && marker_gray < background.min_level() - 50.0)) {
    throw Error(Errc::invalid_scene,
                "marker must be at least 50 levels darker than the background");
  }
  // The marker's far corner must stay inside the frame at every angle.
  const double reach = std::hypot(arm_offset + marker_len, marker_wid / 2.0);
  const double size = img_size;
  if (pivot.x - reach < 0.0 || pivot.x + reach > size || pivot.y - reach < 0.0 ||
      pivot.y + reach > size) {
    throw Error(Errc::marker_out_of_bounds,
                "marker sweep leaves the frame (reach " + std::to_string(reach) + ")");
  }
}

namespace {

// Rasterizes the scene at an explicit angle. Sub-exposures of a motion blur
// may legitimately swing outside the [-90, 90] label range, so the label
// check stays in validate() and the geometry is drawn for any angle.
ImageRGB render_at(const SceneSpec& spec, double theta_deg) {
  const int size = spec.img_size;

  const double theta = theta_deg * std::numbers::pi / 180.0;
  const Vec2 dir{std::cos(theta), -std::sin(theta)};  // y-down raster
  const Vec2 nrm{-dir.y, dir.x};
  const double u_lo = spec.arm_offset;
  const double u_hi = spec.arm_offset + spec.marker_len;
  const double v_half = spec.marker_wid / 2.0;

  // Marker bounding box, padded one pixel for the supersampling.
  double bx0 = size, bx1 = 0, by0 = size, by1 = 0;
  for (const double u : {u_lo, u_hi}) {
    for (const double v : {-v_half, v_half}) {
      const Vec2 c = spec.pivot + dir * u + nrm * v;
      bx0 = std::min(bx0, c.x);
      bx1 = std::max(bx1, c.x);
      by0 = std::min(by0, c.y);
      by1 = std::max(by1, c.y);
    }
  }
  const int mx0 = std::max(0, static_cast<int>(std::floor(bx0)) - 1);
  const int mx1 = std::min(size - 1, static_cast<int>(std::ceil(bx1)) + 1);
  const int my0 = std::max(0, static_cast<int>(std::floor(by0)) - 1);
  const int my1 = std::min(size - 1, static_cast<int>(std::ceil(by1)) + 1);

  ImageRGB img(size, size);
  const bool noisy = spec.noise_sigma > 0.0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double bg = spec.background.value_at(x, y, size, size);
      double value = bg;

      if (x >= mx0 && x <= mx1 && y >= my0 && y <= my1) {
        // 4x4 supersampled coverage of the rotated rectangle.
        int inside = 0;
        for (int sy = 0; sy < 4; ++sy) {
          for (int sx = 0; sx < 4; ++sx) {
            const Vec2 p{x + (sx + 0.5) / 4.0, y + (sy + 0.5) / 4.0};
            const Vec2 rel = p - spec.pivot;
            const double u = dot(rel, dir);
            const double v = dot(rel, nrm);
            if (u >= u_lo && u <= u_hi && v >= -v_half && v <= v_half) ++inside;
          }
        }
        if (inside > 0) {
          const double cover = inside / 16.0;
          value = spec.marker_gray * cover + bg * (1.0 - cover);
        }
      }

      if (noisy) {
        const std::uint64_t idx = static_cast<std::uint64_t>(y) * size + x;
        const double u1 = std::max(hash01(spec.noise_seed, 2 * idx), 0x1.0p-53);
        const double u2 = hash01(spec.noise_seed, 2 * idx + 1);
        const double gauss = std::sqrt(-2.0 * std::log(u1)) *
                             std::cos(2.0 * std::numbers::pi * u2);
        value += spec.noise_sigma * gauss;
      }

      const std::uint8_t q = quantize_u8(value);
      std::uint8_t* px = img.pixel(x, y);
      px[0] = px[1] = px[2] = q;
    }
  }
  return img;
}

}  // namespace

RenderResult render_scene(const SceneSpec& spec) {
  spec.validate();
  return {render_at(spec, spec.theta_deg), spec.theta_deg};
}

RenderResult render_motion_blur(const SceneSpec& spec, const BlurSpec& blur) {
  if (blur.k_sub < 1) throw Error(Errc::invalid_scene, "k_sub must be >= 1");
  if (blur.sweep_deg < 0.0) throw Error(Errc::invalid_scene, "sweep must be >= 0");
  if (blur.sweep_deg == 0.0 || blur.k_sub == 1) {
    return render_scene(spec);
  }
  spec.validate();

  const int k = blur.k_sub;
  const int size = spec.img_size;
  std::vector<double> acc(static_cast<std::size_t>(size) * size * 3, 0.0);
  for (int i = 0; i < k; ++i) {
    const double sub_theta = spec.theta_deg - blur.sweep_deg / 2.0 +
                             blur.sweep_deg * (i + 0.5) / k;
    const ImageRGB frame = render_at(spec, sub_theta);
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += frame.data[j];
  }

  ImageRGB img(size, size);
  for (std::size_t j = 0; j < acc.size(); ++j) {
    img.data[j] = quantize_u8(acc[j] / k);
  }
  return {std::move(img), spec.theta_deg};
}

DatasetManifest generate_batch(int count_per_angle, int angle_min, int angle_max,
                               const std::vector<Background>& backgrounds,
                               const std::optional<BlurSpec>& blur,
                               const std::string& out_dir, std::uint64_t seed,
                               const SceneSpec& proto) {
  if (count_per_angle < 1) throw Error(Errc::invalid_scene, "count_per_angle >= 1");
  if (angle_min > angle_max) throw Error(Errc::invalid_scene, "angle_min > angle_max");
  if (backgrounds.empty()) throw Error(Errc::invalid_scene, "need a background");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw Error(Errc::io_failure, "cannot create output directory: " + out_dir);
  }

  const bool blurred = blur.has_value() && blur->sweep_deg > 0.0;
  const int angles = angle_max - angle_min + 1;
  const std::size_t total = static_cast<std::size_t>(angles) * count_per_angle;

  DatasetManifest manifest;
  manifest.root = out_dir;
  manifest.entries.resize(total);

  parallel_for(total, [&](std::size_t i) {
    const int angle = angle_min + static_cast<int>(i) / count_per_angle;
    const int idx = static_cast<int>(i) % count_per_angle;

    SceneSpec spec = proto;
    spec.theta_deg = angle;
    spec.background = backgrounds[idx % backgrounds.size()];

    // Per-frame jitter: geometry scales by up to +/-10%, the pivot wanders
    // inside whatever slack that leaves.
    Rng rng(mix_seed(seed, i));
    spec.arm_offset *= rng.uniform(0.9, 1.1);
    spec.marker_len *= rng.uniform(0.9, 1.1);
    spec.marker_wid *= rng.uniform(0.9, 1.1);
    double reach = std::hypot(spec.arm_offset + spec.marker_len, spec.marker_wid / 2.0);
    const double max_reach = spec.img_size / 2.0 - 1.0;
    if (reach > max_reach) {
      const double shrink = max_reach / reach;
      spec.arm_offset *= shrink;
      spec.marker_len *= shrink;
      spec.marker_wid *= shrink;
      reach = max_reach;
    }
    const double slack =
        std::max(0.0, std::min(spec.img_size / 2.0 - reach - 1.0, 0.1 * spec.img_size));
    spec.pivot.x = proto.pivot.x + rng.uniform(-slack, slack);
    spec.pivot.y = proto.pivot.y + rng.uniform(-slack, slack);
    spec.noise_seed = mix_seed(seed, i * 2 + 1);

    const RenderResult r =
        blurred ? render_motion_blur(spec, *blur) : render_scene(spec);

    char name[64];
    std::snprintf(name, sizeof(name), "a%+04d_i%03d%s.png", angle, idx,
                  blurred ? "_b" : "");
    save_image(r.image, (fs::path(out_dir) / name).string());

    ManifestEntry e;
    e.path = name;
    e.angle_deg = r.truth_deg;
    e.blur = blurred;
    e.batch = idx % static_cast<int>(backgrounds.size());
    e.source = EntrySource::synthetic;
    manifest.entries[i] = std::move(e);
  });

  save_manifest(manifest, (fs::path(out_dir) / "manifest.csv").string());
  return manifest;
}

}  // namespace markerlens
