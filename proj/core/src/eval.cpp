#include "markerlens/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "markerlens/image_io.hpp"
#include "markerlens/parallel.hpp"

namespace markerlens {

double aee(double pred_deg, double truth_deg) {
  if (!(pred_deg >= -90.0 && pred_deg <= 90.0) ||
      !(truth_deg >= -90.0 && truth_deg <= 90.0)) {
    throw Error(Errc::out_of_range, "angles must lie in [-90, 90]");
  }
  return std::abs(pred_deg - truth_deg);
}

AEEStats summarize(std::span<const double> errors) {
  AEEStats s;
  s.n = errors.size();
  if (s.n == 0) return s;

  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());

  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) /
           static_cast<double>(s.n);

  const std::size_t mid = s.n / 2;
  s.median = (s.n % 2 == 1) ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);

  double var = 0.0;
  for (double e : sorted) var += (e - s.mean) * (e - s.mean);
  s.std_dev = std::sqrt(var / static_cast<double>(s.n));

  // Nearest-rank: value at 1-based index ceil(0.9 n).
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(0.9 * static_cast<double>(s.n)));
  s.p90 = sorted[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

Estimator make_baseline_estimator(const PipelineConfig& cfg) {
  return [cfg](const ImageRGB& img) { return run_baseline(img, cfg); };
}

Estimator make_model_estimator(const RegressionModel& model) {
  return [&model](const ImageRGB& img) { return predict_angle(model, img); };
}

EvalReport evaluate(const Estimator& estimator, const std::string& estimator_tag,
                    const DatasetManifest& m) {
  if (m.entries.empty()) {
    throw Error(Errc::empty_dataset, "evaluate needs a non-empty manifest");
  }

  struct Slot {
    bool ok = false;
    double error = 0.0;
  };
  std::vector<Slot> slots(m.entries.size());
  parallel_for(m.entries.size(), [&](std::size_t i) {
    const ImageRGB img = load_image(m.resolve(m.entries[i]));
    try {
      const AngleEstimate est = estimator(img);
      slots[i].error = aee(est.theta_deg, m.entries[i].angle_deg);
      slots[i].ok = true;
    } catch (const Error& e) {
      if (e.code() != Errc::detection_failed) throw;
    }
  });

  std::vector<double> raw_errors, blur_errors, all_errors;
  std::size_t raw_fail = 0, blur_fail = 0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const bool blurred = m.entries[i].blur;
    if (!slots[i].ok) {
      (blurred ? blur_fail : raw_fail) += 1;
      continue;
    }
    (blurred ? blur_errors : raw_errors).push_back(slots[i].error);
    all_errors.push_back(slots[i].error);
  }

  EvalReport report;
  report.raw = summarize(raw_errors);
  report.raw.fail_count = raw_fail;
  report.blurry = summarize(blur_errors);
  report.blurry.fail_count = blur_fail;
  report.all = summarize(all_errors);
  report.all.fail_count = raw_fail + blur_fail;
  report.estimator = estimator_tag;
  return report;
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double time_estimator_pass(const Estimator& estimator,
                           const std::vector<ImageRGB>& images) {
  const auto t0 = std::chrono::steady_clock::now();
  for (const ImageRGB& img : images) {
    try {
      (void)estimator(img);
    } catch (const Error& e) {
      if (e.code() != Errc::detection_failed) throw;
    }
  }
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

BenchResult bench_runtime(const PipelineConfig& cfg, const RegressionModel& model,
                          const DatasetManifest& m, int repeats) {
  repeats = std::max(repeats, 3);

  // Preload the sharp slice; decode time is not part of the estimate.
  std::vector<ImageRGB> images;
  for (const ManifestEntry& e : m.entries) {
    if (!e.blur) images.push_back(load_image(m.resolve(e)));
  }
  if (images.empty()) {
    throw Error(Errc::empty_dataset, "no sharp images to benchmark");
  }

  const Estimator baseline = make_baseline_estimator(cfg);
  const Estimator model_est = make_model_estimator(model);

  std::vector<double> base_times, model_times;
  for (int r = 0; r < repeats; ++r) {
    base_times.push_back(time_estimator_pass(baseline, images));
    model_times.push_back(time_estimator_pass(model_est, images));
  }

  BenchResult result;
  const double per = static_cast<double>(images.size());
  result.baseline_seconds_per_image = median_of(base_times) / per;
  result.model_seconds_per_image = median_of(model_times) / per;
  result.ratio = result.model_seconds_per_image / result.baseline_seconds_per_image;
  return result;
}

namespace {

std::string format2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string render_report(const EvalReport& r, ReportFormat format) {
  const AEEStats* slices[3] = {&r.raw, &r.blurry, &r.all};

  if (format == ReportFormat::csv) {
    std::ostringstream out;
    out << "slice,n,mean,median,std,p90,fail_count\n";
    const char* names[3] = {"raw", "blurry", "all"};
    for (int i = 0; i < 3; ++i) {
      const AEEStats& s = *slices[i];
      out << names[i] << ',' << s.n << ',' << format2(s.mean) << ','
          << format2(s.median) << ',' << format2(s.std_dev) << ','
          << format2(s.p90) << ',' << s.fail_count << '\n';
    }
    return out.str();
  }

  std::ostringstream out;
  out << "| Dataset | Raw Images | Blurry Images | All images |\n";
  out << "|---|---|---|---|\n";
  out << "| Number of images | " << r.raw.n << " | " << r.blurry.n << " | "
      << r.all.n << " |\n";
  out << "| Mean AEE | " << format2(r.raw.mean) << " | " << format2(r.blurry.mean)
      << " | " << format2(r.all.mean) << " |\n";
  out << "| Median AEE | " << format2(r.raw.median) << " | "
      << format2(r.blurry.median) << " | " << format2(r.all.median) << " |\n";
  out << "| Standard deviation of AEE | " << format2(r.raw.std_dev) << " | "
      << format2(r.blurry.std_dev) << " | " << format2(r.all.std_dev) << " |\n";
  out << "| 90th percentile of AEE | " << format2(r.raw.p90) << " | "
      << format2(r.blurry.p90) << " | " << format2(r.all.p90) << " |\n";
  if (r.runtime_ratio) {
    out << "\nRuntime ratio (model / baseline): " << format2(*r.runtime_ratio)
        << "\n";
  }
  return out.str();
}

}  // namespace markerlens
