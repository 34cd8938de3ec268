#include "markerlens/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "markerlens/simplify.hpp"

namespace markerlens {

void PipelineConfig::validate() const {
  if (threshold < 0 || threshold > 255) {
    throw Error(Errc::parse_error, "threshold must be in [0,255]");
  }
  if (!(canny_low > 0.0 && canny_low < canny_high)) {
    throw Error(Errc::parse_error, "require 0 < canny_low < canny_high");
  }
  if (!(dp_epsilon_frac > 0.0 && dp_epsilon_frac < 1.0)) {
    throw Error(Errc::parse_error, "dp_epsilon_frac must be in (0,1)");
  }
  if (!(min_area_frac > 0.0 && min_area_frac < max_area_frac && max_area_frac <= 1.0)) {
    throw Error(Errc::parse_error, "require 0 < min_area_frac < max_area_frac <= 1");
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& value, const std::string& key) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw Error(Errc::parse_error, "bad numeric value for " + key + ": " + value);
  }
  if (pos != value.size()) {
    throw Error(Errc::parse_error, "trailing junk after " + key + " value: " + value);
  }
  return v;
}

}  // namespace

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::file_not_found, "cannot open config: " + path);

  PipelineConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::parse_error,
                  path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "threshold") {
      cfg.threshold = static_cast<int>(parse_number(value, key));
    } else if (key == "canny_low") {
      cfg.canny_low = parse_number(value, key);
    } else if (key == "canny_high") {
      cfg.canny_high = parse_number(value, key);
    } else if (key == "dp_epsilon_frac") {
      cfg.dp_epsilon_frac = parse_number(value, key);
    } else if (key == "min_area_frac") {
      cfg.min_area_frac = parse_number(value, key);
    } else if (key == "max_area_frac") {
      cfg.max_area_frac = parse_number(value, key);
    } else if (key == "contour_source") {
      if (value == "edges") {
        cfg.contour_source = ContourSource::edges;
      } else if (value == "threshold") {
        cfg.contour_source = ContourSource::threshold;
      } else {
        throw Error(Errc::parse_error, "contour_source must be edges or threshold");
      }
    } else {
      throw Error(Errc::parse_error,
                  path + ":" + std::to_string(lineno) + ": unknown key: " + key);
    }
  }
  cfg.validate();
  return cfg;
}

void save_pipeline_config(const PipelineConfig& cfg, const std::string& path) {
  std::ostringstream out;
  out << "threshold = " << cfg.threshold << "\n";
  out << "canny_low = " << cfg.canny_low << "\n";
  out << "canny_high = " << cfg.canny_high << "\n";
  out << "dp_epsilon_frac = " << cfg.dp_epsilon_frac << "\n";
  out << "min_area_frac = " << cfg.min_area_frac << "\n";
  out << "max_area_frac = " << cfg.max_area_frac << "\n";
  out << "contour_source = "
      << (cfg.contour_source == ContourSource::edges ? "edges" : "threshold") << "\n";

  std::ofstream file(path, std::ios::binary);
  if (!file || !(file << out.str()) || !file.flush()) {
    throw Error(Errc::io_failure, "cannot write config: " + path);
  }
}

BinaryImage binary_threshold(const ImageGray& img, int t, bool invert) {
  BinaryImage out(img.width, img.height);
  const std::size_t n = img.data.size();
  for (std::size_t i = 0; i < n; ++i) {
    const bool fg = invert ? img.data[i] <= t : img.data[i] > t;
    out.data[i] = fg ? 255 : 0;
  }
  return out;
}

Quad select_marker(const std::vector<Polygon>& polys, double img_area,
                   const PipelineConfig& cfg) {
  const double min_area = cfg.min_area_frac * img_area;
  const double max_area = cfg.max_area_frac * img_area;

  bool found = false;
  double best_area = -1.0;
  std::array<Vec2, 4> best{};
  for (const Polygon& p : polys) {
    if (p.vertices.size() != 4) continue;
    std::array<Vec2, 4> v{p.vertices[0], p.vertices[1], p.vertices[2], p.vertices[3]};
    if (!Quad::is_simple(v)) continue;
    const double area = polygon_area(p);
    if (area < min_area || area > max_area) continue;
    if (area > best_area) {
      best_area = area;
      best = v;
      found = true;
    }
  }
  if (!found) {
    throw Error(Errc::detection_failed, "no 4-vertex polygon inside the area band");
  }
  return Quad::from_vertices(best);
}

AngleEstimate run_baseline(const ImageRGB& img, const PipelineConfig& cfg) {
  cfg.validate();
  const ImageGray gray = to_grayscale(img);
  const BinaryImage binary = binary_threshold(gray, cfg.threshold, /*invert=*/true);

  std::vector<Contour> contours;
  if (cfg.contour_source == ContourSource::edges) {
    const BinaryImage edges = canny(binary_to_gray(binary), cfg.canny_low, cfg.canny_high);
    contours = trace_contours(edges);
  } else {
    contours = trace_contours(binary);
  }

  std::vector<Polygon> polys;
  polys.reserve(contours.size());
  for (const Contour& c : contours) {
    if (c.kind != ContourKind::outer) continue;  // holes never hold the marker
    if (c.points.size() < 4) continue;
    polys.push_back(simplify(c, cfg.dp_epsilon_frac * c.perimeter()));
  }

  const double img_area = static_cast<double>(img.width) * img.height;
  const Quad quad = select_marker(polys, img_area, cfg);
  const MidpointPair mids = short_side_midpoints(quad);

  AngleEstimate est;
  est.theta_deg = estimate_angle(mids);
  est.method = EstimatorMethod::baseline;
  est.quad = quad;
  return est;
}

}  // namespace markerlens
