#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "markerlens/dataset.hpp"
#include "markerlens/geometry.hpp"
#include "markerlens/image.hpp"

namespace markerlens {

// --- frozen feature extractor ----------------------------------------------

struct ConvBlock {
  int in_ch = 0;
  int out_ch = 0;
  std::vector<double> w;  // [out][in][3][3]
  std::vector<double> b;  // [out]
};

// Three {conv 3x3, ReLU, maxpool 2x2} blocks over a 128x128 grayscale input
// normalized to [0,1]; channels 1 -> 8 -> 16 -> 32, flattened to 8192.
struct FeatureExtractor {
  static constexpr int kInputSize = 128;
  static constexpr std::array<int, 4> kChannels{1, 8, 16, 32};

  std::array<ConvBlock, 3> blocks;
  bool frozen = false;

  std::size_t feature_dim() const;  // 32 * 16 * 16

  // He-initialized stack, already frozen. The fast substitute for
  // pretrain_features when feature quality does not matter.
  static FeatureExtractor random(std::uint64_t seed);
};

// Area-averaged resize to 128x128, grayscale, scaled to [0,1].
std::vector<double> preprocess_input(const ImageRGB& img);

std::vector<double> extract_features(const FeatureExtractor& fe, const ImageRGB& img);

// --- regression head --------------------------------------------------------

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> w;  // [out][in]
  std::vector<double> b;  // [out]
};

// Fully connected stack, ReLU on every hidden layer and a sigmoid on the
// scalar output, so predictions always live strictly inside (0,1).
struct RegressionHead {
  std::vector<DenseLayer> layers;

  int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  std::size_t parameter_count() const;

  // dims = {input, hidden..., 1}. He init for the ReLU layers, Xavier for
  // the sigmoid layer, all drawn from the seed.
  static RegressionHead make(const std::vector<int>& dims, std::uint64_t seed);

  // The 128/64/64/64 architecture on top of a given feature width.
  static RegressionHead standard(int input_dim, std::uint64_t seed);
};

// Throws dimension_mismatch when the feature length is wrong.
double forward(const RegressionHead& head, std::span<const double> features);

// Mean of squared differences. Throws length_mismatch / empty_input.
double mse_loss(std::span<const double> pred, std::span<const double> target);

// --- training ----------------------------------------------------------------

struct Hyperparams {
  enum class Optimizer { sgd_momentum, adam };

  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 10;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::adam;

  void validate() const;
};

struct TrainReport {
  std::vector<double> train_loss;  // one entry per epoch
  std::vector<double> val_loss;
  double wall_seconds = 0.0;
};

struct RegressionModel {
  FeatureExtractor extractor;
  RegressionHead head;
};

struct PretrainStats {
  double final_train_ce = 0.0;
  double holdout_accuracy = 0.0;  // on the internal 10% holdout
};

// Trains the conv stack plus a throwaway angle-bin classifier on the aux
// set, then discards the classifier and returns the stack frozen. The aux
// backgrounds should be disjoint from the fine-tuning batches.
FeatureExtractor pretrain_features(const DatasetManifest& aux, int bins,
                                   const Hyperparams& h,
                                   PretrainStats* stats = nullptr);

// Mini-batch MSE training of a fresh standard head on frozen features.
// Deterministic given (seed, data, hyperparams); the extractor is never
// touched. Throws empty_dataset and non_finite_loss.
std::pair<RegressionModel, TrainReport> train(const FeatureExtractor& fe,
                                              const DatasetManifest& train_m,
                                              const DatasetManifest& val_m,
                                              const Hyperparams& h);

AngleEstimate predict_angle(const RegressionModel& model, const ImageRGB& img);

// Max relative error between analytic gradients of mse_loss(forward(f))
// and central finite differences, over every head parameter. Components
// where both sides sit below 1e-8 in magnitude compare absolutely.
double grad_check(const RegressionHead& head, std::span<const double> features,
                  double target, double eps = 1e-5);

}  // namespace markerlens
