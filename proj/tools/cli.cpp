#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "markerlens/dataset.hpp"
#include "markerlens/error.hpp"
#include "markerlens/eval.hpp"
#include "markerlens/image_io.hpp"
#include "markerlens/model_io.hpp"
#include "markerlens/nn.hpp"
#include "markerlens/pipeline.hpp"
#include "markerlens/rng.hpp"
#include "markerlens/scene.hpp"

namespace fs = std::filesystem;

namespace markerlens {
namespace {

// Published reference for the model/baseline runtime comparison.
constexpr double kReferenceRuntimeRatio = 4.88;

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::vector<Background> builtin_backgrounds(int count) {
  const std::vector<Background> all = {
      Background::flat(200.0),
      Background::checker(32, 160, 220),
      Background::checker(24, 190, 240),
      Background::flat(170.0),
      Background::gradient(150.0, 230.0),
      Background::noise(180.0, 7),
  };
  if (count < 1 || count > static_cast<int>(all.size())) {
    throw CLI::ValidationError("--batches must be between 1 and " +
                               std::to_string(all.size()));
  }
  return {all.begin(), all.begin() + count};
}

struct SynthOptions {
  std::string out_dir;
  int per_angle = 2;
  int batches = 4;
  double blur_sweep = 0.0;
  int k_sub = 16;
  std::uint64_t seed = 0;
  int size = 256;
  int angle_min = -90;
  int angle_max = 90;
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  const std::vector<Background> backgrounds = builtin_backgrounds(o.batches);
  const SceneSpec proto = SceneSpec::defaults(o.size);

  DatasetManifest manifest = generate_batch(o.per_angle, o.angle_min, o.angle_max,
                                            backgrounds, std::nullopt, o.out_dir,
                                            o.seed, proto);
  if (o.blur_sweep > 0.0) {
    const BlurSpec blur{o.blur_sweep, o.k_sub};
    const DatasetManifest blurred =
        generate_batch(o.per_angle, o.angle_min, o.angle_max, backgrounds, blur,
                       o.out_dir, o.seed, proto);
    manifest.entries.insert(manifest.entries.end(), blurred.entries.begin(),
                            blurred.entries.end());
  }

  const std::string manifest_path = (fs::path(o.out_dir) / "manifest.csv").string();
  save_manifest(manifest, manifest_path);
  out << "count=" << manifest.entries.size() << "\n";
  out << "manifest=" << manifest_path << "\n";
  return 0;
}

struct LabelOptions {
  std::string images;
  std::string config;
  std::string out_path;
};

int cmd_label(const LabelOptions& o, std::ostream& out) {
  const PipelineConfig cfg =
      o.config.empty() ? PipelineConfig{} : load_pipeline_config(o.config);
  AutoLabelResult result = auto_label(o.images, cfg);

  // Manifest paths are relative to the manifest file, which may live
  // elsewhere than the image directory.
  fs::path out_dir = fs::absolute(o.out_path).parent_path();
  for (ManifestEntry& e : result.manifest.entries) {
    e.path = fs::relative(fs::absolute(o.images) / e.path, out_dir).string();
  }
  save_manifest(result.manifest, o.out_path);

  out << "labeled=" << result.labeled << "\n";
  out << "skipped=" << result.skipped << "\n";
  out << "manifest=" << o.out_path << "\n";
  return 0;
}

struct AugmentOptions {
  std::string manifest;
  std::string out_dir;
  std::uint64_t seed = 0;
  double sigma_max = 6.0;
};

int cmd_augment(const AugmentOptions& o, std::ostream& out) {
  const DatasetManifest source = load_manifest(o.manifest);

  std::error_code ec;
  fs::create_directories(o.out_dir, ec);
  if (!fs::is_directory(o.out_dir)) {
    throw Error(Errc::io_failure, "cannot create output directory: " + o.out_dir);
  }

  AugmentRanges ranges;
  ranges.sigma_max = o.sigma_max;

  DatasetManifest merged;
  merged.root = o.out_dir;
  const fs::path out_abs = fs::absolute(o.out_dir);

  // Keep the originals reachable from the new manifest.
  for (const ManifestEntry& e : source.entries) {
    ManifestEntry copy = e;
    copy.path = fs::relative(fs::absolute(source.resolve(e)), out_abs).string();
    merged.entries.push_back(std::move(copy));
  }

  int augmented = 0;
  for (std::size_t i = 0; i < source.entries.size(); ++i) {
    const ManifestEntry& e = source.entries[i];
    if (e.blur) continue;  // blurred originals keep their one label

    const ImageRGB img = load_image(source.resolve(e));
    Rng rng(mix_seed(o.seed, i));
    const AugmentSpec spec = ranges.sample(rng, img.width, img.height);
    const ImageRGB result = augment(img, spec);

    const std::string name = fs::path(e.path).stem().string() + "_aug.png";
    save_image(result, (fs::path(o.out_dir) / name).string());

    ManifestEntry aug_entry = e;
    aug_entry.path = name;
    aug_entry.blur = true;  // the blurred copy inherits the sharp label
    merged.entries.push_back(std::move(aug_entry));
    ++augmented;
  }

  const std::string manifest_path = (fs::path(o.out_dir) / "manifest.csv").string();
  save_manifest(merged, manifest_path);
  out << "augmented=" << augmented << "\n";
  out << "count=" << merged.entries.size() << "\n";
  out << "manifest=" << manifest_path << "\n";
  return 0;
}

struct TrainOptions {
  std::string train_manifest;
  std::string val_manifest;
  std::string out_model;
  std::string aux_manifest;
  int epochs = 30;
  double lr = 1e-3;
  int batch_size = 32;
  std::uint64_t seed = 0;
  bool random_frozen = false;
  int bins = 18;
  int pretrain_epochs = 2;
};

int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
  Hyperparams h;
  h.learning_rate = o.lr;
  h.batch_size = o.batch_size;
  h.epochs = o.epochs;
  h.seed = o.seed;

  FeatureExtractor fe;
  if (o.random_frozen) {
    fe = FeatureExtractor::random(o.seed);
  } else {
    Hyperparams ph = h;
    ph.epochs = o.pretrain_epochs;
    err << "pretraining feature extractor on " << o.aux_manifest << "\n";
    PretrainStats stats;
    fe = pretrain_features(load_manifest(o.aux_manifest), o.bins, ph, &stats);
    out << "pretrain_holdout_accuracy=" << fmt("%.4f", stats.holdout_accuracy) << "\n";
  }

  const auto [model, report] =
      train(fe, load_manifest(o.train_manifest), load_manifest(o.val_manifest), h);
  save_model(model, o.out_model);

  out << "epochs=" << report.train_loss.size() << "\n";
  out << "final_train_loss=" << fmt("%.8f", report.train_loss.back()) << "\n";
  out << "final_val_loss=" << fmt("%.8f", report.val_loss.back()) << "\n";
  out << "wall_seconds=" << fmt("%.2f", report.wall_seconds) << "\n";
  out << "model=" << o.out_model << "\n";
  return 0;
}

struct EstimateOptions {
  std::string image;
  std::string config;
  std::string model;
};

int cmd_estimate(const EstimateOptions& o, std::ostream& out) {
  const ImageRGB img = load_image(o.image);
  AngleEstimate est;
  if (!o.config.empty()) {
    est = run_baseline(img, load_pipeline_config(o.config));
  } else {
    const RegressionModel model = load_model(o.model);
    est = predict_angle(model, img);
  }
  out << "theta_deg=" << fmt("%.6f", est.theta_deg) << "\n";
  return 0;
}

struct EvalOptions {
  std::string config;
  std::string model;
  std::string manifest;
  std::string report_path;
  std::string format = "markdown";
};

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  const DatasetManifest manifest = load_manifest(o.manifest);

  EvalReport report;
  std::optional<RegressionModel> model;  // keeps the estimator's referent alive
  if (!o.config.empty()) {
    const PipelineConfig cfg = load_pipeline_config(o.config);
    report = evaluate(make_baseline_estimator(cfg), "baseline", manifest);
    report.source_id = o.config;
  } else {
    model = load_model(o.model);
    report = evaluate(make_model_estimator(*model), "model", manifest);
    report.source_id = o.model;
  }

  const ReportFormat format =
      o.format == "csv" ? ReportFormat::csv : ReportFormat::markdown;
  const std::string text = render_report(report, format);
  std::ofstream file(o.report_path, std::ios::binary);
  if (!file || !(file << text) || !file.flush()) {
    throw Error(Errc::io_failure, "cannot write report: " + o.report_path);
  }

  out << "report=" << o.report_path << "\n";
  out << "n_raw=" << report.raw.n << "\n";
  out << "n_blurry=" << report.blurry.n << "\n";
  out << "raw_median=" << fmt("%.4f", report.raw.median) << "\n";
  out << "blurry_median=" << fmt("%.4f", report.blurry.median) << "\n";
  out << "raw_fail=" << report.raw.fail_count << "\n";
  out << "blurry_fail=" << report.blurry.fail_count << "\n";
  return 0;
}

struct BenchOptions {
  std::string config;
  std::string model;
  std::string manifest;
  int repeats = 5;
};

int cmd_bench(const BenchOptions& o, std::ostream& out) {
  const PipelineConfig cfg = load_pipeline_config(o.config);
  const RegressionModel model = load_model(o.model);
  const BenchResult r = bench_runtime(cfg, model, load_manifest(o.manifest), o.repeats);

  out << "baseline_ms_per_image=" << fmt("%.3f", r.baseline_seconds_per_image * 1e3)
      << "\n";
  out << "model_ms_per_image=" << fmt("%.3f", r.model_seconds_per_image * 1e3) << "\n";
  out << "ratio=" << fmt("%.2f", r.ratio) << "\n";
  out << "reference_ratio=" << fmt("%.2f", kReferenceRuntimeRatio) << "\n";
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, std::ostream& out) {
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(mix_seed(seed, trial));

    RegressionHead toy = RegressionHead::make({6, 4, 3, 3, 3, 1}, mix_seed(seed, trial));
    std::vector<double> f_toy(6);
    for (double& v : f_toy) v = rng.uniform(-1.0, 1.0);
    worst = std::max(worst, grad_check(toy, f_toy, rng.uniform(0.0, 1.0)));

    RegressionHead full =
        RegressionHead::make({32, 128, 64, 64, 64, 1}, mix_seed(seed, trial + 100));
    std::vector<double> f_full(32);
    for (double& v : f_full) v = rng.uniform(-1.0, 1.0);
    worst = std::max(worst, grad_check(full, f_full, rng.uniform(0.0, 1.0)));
  }
  out << "max_rel_error=" << fmt("%.3e", worst) << "\n";
  out << "pass=" << (worst < 1e-4 ? 1 : 0) << "\n";
  return worst < 1e-4 ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"markerlens: marker-based angular position estimation"};
  app.require_subcommand(1);

  SynthOptions synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "render a labeled synthetic dataset");
  synth_cmd->add_option("--out", synth.out_dir, "output directory")->required();
  synth_cmd->add_option("--per-angle", synth.per_angle, "frames per integer angle");
  synth_cmd->add_option("--batches", synth.batches, "background conditions to cycle");
  synth_cmd->add_option("--blur-sweep", synth.blur_sweep,
                        "also render motion-blurred twins with this sweep (deg)");
  synth_cmd->add_option("--k-sub", synth.k_sub, "sub-exposures per blurred frame");
  synth_cmd->add_option("--seed", synth.seed, "rng seed");
  synth_cmd->add_option("--size", synth.size, "square image size in pixels");
  synth_cmd->add_option("--angle-min", synth.angle_min, "first integer angle");
  synth_cmd->add_option("--angle-max", synth.angle_max, "last integer angle");

  LabelOptions label;
  CLI::App* label_cmd =
      app.add_subcommand("label", "auto-label a directory with the baseline");
  label_cmd->add_option("--images", label.images, "image directory")->required();
  label_cmd->add_option("--config", label.config, "pipeline config file");
  label_cmd->add_option("--out", label.out_path, "output manifest csv")->required();

  AugmentOptions augment_opts;
  CLI::App* augment_cmd =
      app.add_subcommand("augment", "write augmented blurred copies of sharp entries");
  augment_cmd->add_option("--manifest", augment_opts.manifest, "source manifest")->required();
  augment_cmd->add_option("--out", augment_opts.out_dir, "output directory")->required();
  augment_cmd->add_option("--seed", augment_opts.seed, "rng seed");
  augment_cmd->add_option("--sigma-max", augment_opts.sigma_max, "max gaussian sigma");

  TrainOptions train_opts;
  CLI::App* train_cmd = app.add_subcommand("train", "train the regression model");
  train_cmd->add_option("--train", train_opts.train_manifest, "training manifest")->required();
  train_cmd->add_option("--val", train_opts.val_manifest, "validation manifest")->required();
  train_cmd->add_option("--out", train_opts.out_model, "output model file")->required();
  train_cmd->add_option("--aux", train_opts.aux_manifest,
                        "aux manifest for extractor pretraining");
  train_cmd->add_option("--epochs", train_opts.epochs, "training epochs");
  train_cmd->add_option("--lr", train_opts.lr, "learning rate");
  train_cmd->add_option("--batch-size", train_opts.batch_size, "minibatch size");
  train_cmd->add_option("--seed", train_opts.seed, "rng seed");
  train_cmd->add_option("--bins", train_opts.bins, "pretraining angle bins");
  train_cmd->add_option("--pretrain-epochs", train_opts.pretrain_epochs,
                        "extractor pretraining epochs");
  train_cmd->add_flag("--random-frozen", train_opts.random_frozen,
                      "skip pretraining and freeze a random extractor");

  EstimateOptions estimate;
  CLI::App* estimate_cmd = app.add_subcommand("estimate", "estimate one image's angle");
  estimate_cmd->add_option("--image", estimate.image, "input image")->required();
  estimate_cmd->add_option("--config", estimate.config, "baseline config file");
  estimate_cmd->add_option("--model", estimate.model, "trained model file");

  EvalOptions eval_opts;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate an estimator over a manifest");
  eval_cmd->add_option("--config", eval_opts.config, "baseline config file");
  eval_cmd->add_option("--model", eval_opts.model, "trained model file");
  eval_cmd->add_option("--manifest", eval_opts.manifest, "dataset manifest")->required();
  eval_cmd->add_option("--report", eval_opts.report_path, "report output path")->required();
  eval_cmd->add_option("--format", eval_opts.format, "markdown or csv")
      ->check(CLI::IsMember({"markdown", "csv"}));

  BenchOptions bench;
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "compare baseline and model runtime");
  bench_cmd->add_option("--config", bench.config, "baseline config file")->required();
  bench_cmd->add_option("--model", bench.model, "trained model file")->required();
  bench_cmd->add_option("--manifest", bench.manifest, "dataset manifest")->required();
  bench_cmd->add_option("--repeats", bench.repeats, "timing repeats");

  std::uint64_t gradcheck_seed = 0;
  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "verify head gradients against finite differences");
  gradcheck_cmd->add_option("--seed", gradcheck_seed, "rng seed");

  std::vector<const char*> argv;
  argv.push_back("markerlens");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    err << app.get_subcommands().empty() ? app.help() : std::string();
    return 2;
  }

  try {
    if (*synth_cmd) return cmd_synth(synth, out);
    if (*label_cmd) return cmd_label(label, out);
    if (*augment_cmd) return cmd_augment(augment_opts, out);
    if (*train_cmd) {
      if (!train_opts.random_frozen && train_opts.aux_manifest.empty()) {
        err << "train: pass either --aux MANIFEST or --random-frozen\n";
        return 2;
      }
      return cmd_train(train_opts, out, err);
    }
    if (*estimate_cmd) {
      if (estimate.config.empty() == estimate.model.empty()) {
        err << "estimate: pass exactly one of --config or --model\n";
        return 2;
      }
      return cmd_estimate(estimate, out);
    }
    if (*eval_cmd) {
      if (eval_opts.config.empty() == eval_opts.model.empty()) {
        err << "eval: pass exactly one of --config or --model\n";
        return 2;
      }
      return cmd_eval(eval_opts, out);
    }
    if (*bench_cmd) return cmd_bench(bench, out);
    if (*gradcheck_cmd) return cmd_gradcheck(gradcheck_seed, out);
  } catch (const CLI::Error& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    out << "error=" << e.code_name() << "\n";
    err << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    out << "error=internal\n";
    err << e.what() << "\n";
    return 1;
  }

  err << app.help();
  return 2;
}

}  // namespace markerlens
