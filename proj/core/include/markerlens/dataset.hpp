#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "markerlens/image.hpp"
#include "markerlens/pipeline.hpp"
#include "markerlens/rng.hpp"

namespace markerlens {

enum class EntrySource { synthetic, auto_label, manual };

const char* entry_source_name(EntrySource s);

struct ManifestEntry {
  std::string path;        // relative to the manifest's directory
  double angle_deg = 0.0;  // [-90, 90]
  bool blur = false;
  int batch = 0;
  EntrySource source = EntrySource::synthetic;

  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::string root;

  std::string resolve(const ManifestEntry& e) const;
};

// One concrete application of the augmentation chain, applied in the fixed
// order blur -> brightness -> channel -> shift. Photometric steps clamp to
// [0,255]; the shift replicates edges. None of the steps rotate, so the
// angle label carries over unchanged.
struct AugmentSpec {
  double blur_sigma = 0.0;
  int brightness_delta = 0;                  // [-64, 64]
  std::array<int, 3> channel_deltas{0, 0, 0};  // [-32, 32] each
  int shift_dx = 0;
  int shift_dy = 0;
};

// Sampling ranges for the randomized workflow; one AugmentSpec is drawn per
// image.
struct AugmentRanges {
  double sigma_min = 1.0;
  double sigma_max = 6.0;
  int brightness_mag = 40;
  int channel_mag = 32;
  double shift_frac = 0.10;  // of image side

  AugmentSpec sample(Rng& rng, int width, int height) const;
};

// Throws shift_too_large when |shift| reaches 25% of the image side.
ImageRGB augment(const ImageRGB& img, const AugmentSpec& spec);

struct AutoLabelResult {
  DatasetManifest manifest;
  int labeled = 0;
  int skipped = 0;  // frames where the baseline raised detection_failed
};

// Labels every supported image in the directory with the baseline pipeline.
// Failures are skipped and counted, not fatal: only sharp frames are
// expected to label.
AutoLabelResult auto_label(const std::string& image_dir, const PipelineConfig& cfg);

// (train, eval): eval takes every entry of the holdout batch, sharp and
// blurred alike. Throws unknown_batch.
std::pair<DatasetManifest, DatasetManifest> split_holdout(const DatasetManifest& m,
                                                          int holdout_batch);

// Maps [-90, 90] onto [0, 1] for the sigmoid output, and back.
double normalize_label(double theta_deg);
double denormalize_label(double normalized);

// CSV with header `path,angle_deg,blur,batch,source`, UTF-8, LF endings,
// angles at 6 decimals. load verifies the header, field ranges, path
// uniqueness, and that every referenced file exists next to the manifest.
void save_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

}  // namespace markerlens
