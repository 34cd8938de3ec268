#include "markerlens/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "markerlens/image_io.hpp"
#include "markerlens/parallel.hpp"

namespace fs = std::filesystem;

namespace markerlens {

const char* entry_source_name(EntrySource s) {
  switch (s) {
    case EntrySource::synthetic: return "synthetic";
    case EntrySource::auto_label: return "auto_label";
    case EntrySource::manual: return "manual";
  }
  return "unknown";
}

std::string DatasetManifest::resolve(const ManifestEntry& e) const {
  return (fs::path(root) / e.path).string();
}

AugmentSpec AugmentRanges::sample(Rng& rng, int width, int height) const {
  AugmentSpec spec;
  spec.blur_sigma = rng.uniform(sigma_min, sigma_max);
  spec.brightness_delta =
      static_cast<int>(rng.uniform_int(-brightness_mag, brightness_mag));
  for (int c = 0; c < 3; ++c) {
    spec.channel_deltas[c] =
        static_cast<int>(rng.uniform_int(-channel_mag, channel_mag));
  }
  const int max_dx = static_cast<int>(shift_frac * width);
  const int max_dy = static_cast<int>(shift_frac * height);
  spec.shift_dx = static_cast<int>(rng.uniform_int(-max_dx, max_dx));
  spec.shift_dy = static_cast<int>(rng.uniform_int(-max_dy, max_dy));
  return spec;
}

namespace {

ImageRGB blur_rgb(const ImageRGB& img, double sigma) {
  const Kernel k = gaussian_kernel(sigma);
  ImageGray channel(img.width, img.height);
  ImageRGB out(img.width, img.height);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n; ++i) channel.data[i] = img.data[i * 3 + c];
    const ImageGray blurred = convolve(channel, k);
    for (std::size_t i = 0; i < n; ++i) out.data[i * 3 + c] = blurred.data[i];
  }
  return out;
}

std::uint8_t add_clamped(std::uint8_t v, int delta) {
  const int r = static_cast<int>(v) + delta;
  return static_cast<std::uint8_t>(std::clamp(r, 0, 255));
}

}  // namespace

ImageRGB augment(const ImageRGB& img, const AugmentSpec& spec) {
  const int side = std::min(img.width, img.height);
  if (std::abs(spec.shift_dx) >= side / 4 + (side % 4 ? 1 : 0) ||
      std::abs(spec.shift_dy) >= side / 4 + (side % 4 ? 1 : 0)) {
    throw Error(Errc::shift_too_large, "shift must stay below 25% of the image side");
  }

  ImageRGB work = spec.blur_sigma > 0.0 ? blur_rgb(img, spec.blur_sigma) : img;

  const std::size_t n = static_cast<std::size_t>(work.width) * work.height;
  if (spec.brightness_delta != 0) {
    for (std::size_t i = 0; i < n * 3; ++i) {
      work.data[i] = add_clamped(work.data[i], spec.brightness_delta);
    }
  }
  if (spec.channel_deltas != std::array<int, 3>{0, 0, 0}) {
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < 3; ++c) {
        work.data[i * 3 + c] = add_clamped(work.data[i * 3 + c], spec.channel_deltas[c]);
      }
    }
  }

  if (spec.shift_dx == 0 && spec.shift_dy == 0) return work;

  ImageRGB out(work.width, work.height);
  for (int y = 0; y < work.height; ++y) {
    const int sy = std::clamp(y - spec.shift_dy, 0, work.height - 1);
    for (int x = 0; x < work.width; ++x) {
      const int sx = std::clamp(x - spec.shift_dx, 0, work.width - 1);
      const std::uint8_t* src = work.pixel(sx, sy);
      std::uint8_t* dst = out.pixel(x, y);
      dst[0] = src[0];
      dst[1] = src[1];
      dst[2] = src[2];
    }
  }
  return out;
}

AutoLabelResult auto_label(const std::string& image_dir, const PipelineConfig& cfg) {
  if (!fs::is_directory(image_dir)) {
    throw Error(Errc::io_failure, "not a directory: " + image_dir);
  }

  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(image_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (is_supported_image_path(name)) files.push_back(name);
  }
  std::sort(files.begin(), files.end());

  struct Slot {
    bool ok = false;
    double theta = 0.0;
  };
  std::vector<Slot> slots(files.size());
  parallel_for(files.size(), [&](std::size_t i) {
    const ImageRGB img = load_image((fs::path(image_dir) / files[i]).string());
    try {
      slots[i].theta = run_baseline(img, cfg).theta_deg;
      slots[i].ok = true;
    } catch (const Error& e) {
      if (e.code() != Errc::detection_failed) throw;
    }
  });

  AutoLabelResult result;
  result.manifest.root = image_dir;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (!slots[i].ok) {
      ++result.skipped;
      continue;
    }
    ManifestEntry e;
    e.path = files[i];
    e.angle_deg = slots[i].theta;
    e.blur = false;
    e.batch = 0;
    e.source = EntrySource::auto_label;
    result.manifest.entries.push_back(std::move(e));
    ++result.labeled;
  }
  return result;
}

std::pair<DatasetManifest, DatasetManifest> split_holdout(const DatasetManifest& m,
                                                          int holdout_batch) {
  bool seen = false;
  for (const ManifestEntry& e : m.entries) {
    if (e.batch == holdout_batch) {
      seen = true;
      break;
    }
  }
  if (!seen) {
    throw Error(Errc::unknown_batch,
                "batch " + std::to_string(holdout_batch) + " not present");
  }

  DatasetManifest train, eval;
  train.root = m.root;
  eval.root = m.root;
  for (const ManifestEntry& e : m.entries) {
    (e.batch == holdout_batch ? eval : train).entries.push_back(e);
  }
  return {std::move(train), std::move(eval)};
}

double normalize_label(double theta_deg) {
  if (!(theta_deg >= -90.0 && theta_deg <= 90.0)) {
    throw Error(Errc::out_of_range, "angle outside [-90, 90]");
  }
  return (theta_deg + 90.0) / 180.0;
}

double denormalize_label(double normalized) {
  if (!(normalized >= 0.0 && normalized <= 1.0)) {
    throw Error(Errc::out_of_range, "normalized label outside [0, 1]");
  }
  return normalized * 180.0 - 90.0;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
  std::ostringstream out;
  out << "path,angle_deg,blur,batch,source\n";
  char angle[32];
  for (const ManifestEntry& e : m.entries) {
    std::snprintf(angle, sizeof(angle), "%.6f", e.angle_deg);
    out << e.path << ',' << angle << ',' << (e.blur ? 1 : 0) << ',' << e.batch
        << ',' << entry_source_name(e.source) << '\n';
  }
  std::ofstream file(path, std::ios::binary);
  if (!file || !(file << out.str()) || !file.flush()) {
    throw Error(Errc::io_failure, "cannot write manifest: " + path);
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::file_not_found, "cannot open manifest: " + path);

  std::string line;
  if (!std::getline(in, line)) {
    throw Error(Errc::parse_error, "empty manifest: " + path);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "path,angle_deg,blur,batch,source") {
    throw Error(Errc::parse_error, "bad manifest header: " + path);
  }

  DatasetManifest m;
  m.root = fs::path(path).parent_path().string();
  if (m.root.empty()) m.root = ".";

  std::set<std::string> seen_paths;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (fields.size() != 5) {
      throw Error(Errc::parse_error, where + ": expected 5 fields");
    }

    ManifestEntry e;
    e.path = fields[0];
    if (e.path.empty() || !seen_paths.insert(e.path).second) {
      throw Error(Errc::parse_error, where + ": empty or duplicate path");
    }

    try {
      std::size_t pos = 0;
      e.angle_deg = std::stod(fields[1], &pos);
      if (pos != fields[1].size()) throw std::invalid_argument("junk");
    } catch (const std::exception&) {
      throw Error(Errc::parse_error, where + ": non-numeric angle");
    }
    if (!(e.angle_deg >= -90.0 && e.angle_deg <= 90.0)) {
      throw Error(Errc::parse_error, where + ": angle outside [-90, 90]");
    }

    if (fields[2] == "0") {
      e.blur = false;
    } else if (fields[2] == "1") {
      e.blur = true;
    } else {
      throw Error(Errc::parse_error, where + ": blur must be 0 or 1");
    }

    try {
      std::size_t pos = 0;
      e.batch = std::stoi(fields[3], &pos);
      if (pos != fields[3].size()) throw std::invalid_argument("junk");
    } catch (const std::exception&) {
      throw Error(Errc::parse_error, where + ": bad batch id");
    }

    if (fields[4] == "synthetic") {
      e.source = EntrySource::synthetic;
    } else if (fields[4] == "auto_label") {
      e.source = EntrySource::auto_label;
    } else if (fields[4] == "manual") {
      e.source = EntrySource::manual;
    } else {
      throw Error(Errc::parse_error, where + ": unknown source: " + fields[4]);
    }

    m.entries.push_back(std::move(e));
  }

  for (const ManifestEntry& e : m.entries) {
    if (!fs::exists(m.resolve(e))) {
      throw Error(Errc::io_failure, "manifest references missing file: " + m.resolve(e));
    }
  }
  return m;
}

}  // namespace markerlens
