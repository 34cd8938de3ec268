#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "markerlens/dataset.hpp"
#include "markerlens/nn.hpp"
#include "markerlens/pipeline.hpp"

namespace markerlens {

// Absolute estimation error statistics for one slice of the dataset.
struct AEEStats {
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double std_dev = 0.0;  // population
  double p90 = 0.0;      // nearest-rank
  std::size_t fail_count = 0;
};

struct EvalReport {
  AEEStats raw;
  AEEStats blurry;
  AEEStats all;
  std::string estimator;          // "baseline" or "model"
  std::string source_id;          // config path, model path, or a tag
  std::optional<double> runtime_ratio;  // model time / baseline time
};

enum class ReportFormat { markdown, csv };

// |pred - truth| with no circular wrap; both must lie in [-90, 90].
double aee(double pred_deg, double truth_deg);

// mean / median (middle-two average) / population std / nearest-rank p90.
// An empty input produces zeroed stats.
AEEStats summarize(std::span<const double> errors);

// One estimator the harness can drive; detection_failed marks a failure,
// anything else propagates.
using Estimator = std::function<AngleEstimate(const ImageRGB&)>;

Estimator make_baseline_estimator(const PipelineConfig& cfg);
Estimator make_model_estimator(const RegressionModel& model);

// Runs the estimator over every entry, slicing errors by the blur flag.
// Estimator failures count per slice instead of aborting the run.
EvalReport evaluate(const Estimator& estimator, const std::string& estimator_tag,
                    const DatasetManifest& m);

struct BenchResult {
  double baseline_seconds_per_image = 0.0;
  double model_seconds_per_image = 0.0;
  double ratio = 0.0;  // model / baseline
};

// Median-of-repeats per-image wall time over the sharp slice, strictly
// sequential. The ratio is reported next to the published 4.88 for context,
// never asserted against it.
BenchResult bench_runtime(const PipelineConfig& cfg, const RegressionModel& model,
                          const DatasetManifest& m, int repeats = 5);

// The five_report rows (image count, mean, median, std, p90) by slice.
// CSV layout: slice,n,mean,median,std,p90,fail_count.
std::string render_report(const EvalReport& r, ReportFormat format);

}  // namespace markerlens
