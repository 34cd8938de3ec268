#include "markerlens/nn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "markerlens/image_io.hpp"
#include "markerlens/parallel.hpp"
#include "markerlens/rng.hpp"

namespace markerlens {
namespace {

// Sigmoid clamped into [1e-12, 1 - 1e-12]: keeps the output an open
// interval even when the double rounds to exactly 0 or 1, which in turn
// keeps denormalized angles strictly inside (-90, 90).
double sigmoid(double z) {
  const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                            : [&] {
                                const double e = std::exp(z);
                                return e / (1.0 + e);
                              }();
  return std::clamp(s, 1e-12, 1.0 - 1e-12);
}

double he_std(int fan_in) { return std::sqrt(2.0 / fan_in); }

void he_init(std::vector<double>& w, int fan_in, Rng& rng) {
  const double s = he_std(fan_in);
  for (double& v : w) v = s * rng.normal();
}

void xavier_init(std::vector<double>& w, int fan_in, int fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : w) v = rng.uniform(-bound, bound);
}

// --- tensors for the conv stack ---------------------------------------------

struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_),
      v(static_cast<std::size_t>(c_) * h_ * w_, 0.0) {}

  double* plane(int ci) { return v.data() + static_cast<std::size_t>(ci) * h * w; }
  const double* plane(int ci) const {
    return v.data() + static_cast<std::size_t>(ci) * h * w;
  }
};

// 3x3 same-size convolution, zero padding.
void conv3x3(const Tensor& in, const ConvBlock& blk, Tensor& out) {
  out = Tensor(blk.out_ch, in.h, in.w);
  const int H = in.h, W = in.w;
  for (int oc = 0; oc < blk.out_ch; ++oc) {
    double* op = out.plane(oc);
    const double bias = blk.b[oc];
    for (int i = 0; i < H * W; ++i) op[i] = bias;
    for (int ic = 0; ic < blk.in_ch; ++ic) {
      const double* ip = in.plane(ic);
      const double* wk = blk.w.data() + (static_cast<std::size_t>(oc) * blk.in_ch + ic) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double wv = wk[ky * 3 + kx];
          if (wv == 0.0) continue;
          const int dy = ky - 1, dx = kx - 1;
          const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
          const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
          for (int y = y0; y < y1; ++y) {
            double* orow = op + static_cast<std::size_t>(y) * W;
            const double* irow = ip + static_cast<std::size_t>(y + dy) * W + dx;
            for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
          }
        }
      }
    }
  }
}

void relu_inplace(Tensor& t) {
  for (double& v : t.v) v = v > 0.0 ? v : 0.0;
}

void maxpool2(const Tensor& in, Tensor& out, std::vector<std::int32_t>* argmax) {
  const int H = in.h / 2, W = in.w / 2;
  out = Tensor(in.c, H, W);
  if (argmax) argmax->assign(out.v.size(), 0);
  for (int c = 0; c < in.c; ++c) {
    const double* ip = in.plane(c);
    double* op = out.plane(c);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const int base = (2 * y) * in.w + 2 * x;
        const int cand[4] = {base, base + 1, base + in.w, base + in.w + 1};
        int best = cand[0];
        for (int k = 1; k < 4; ++k) {
          if (ip[cand[k]] > ip[best]) best = cand[k];
        }
        const std::size_t oi = static_cast<std::size_t>(y) * W + x;
        op[oi] = ip[best];
        if (argmax) {
          (*argmax)[static_cast<std::size_t>(c) * H * W + oi] =
              c * in.h * in.w + best;
        }
      }
    }
  }
}

struct ConvCache {
  Tensor input;                      // block input
  Tensor pre_pool;                   // post-relu, pre-pool activations
  std::vector<std::int32_t> argmax;  // flat indices into pre_pool
};

Tensor extractor_forward(const FeatureExtractor& fe, const Tensor& input,
                         std::array<ConvCache, 3>* caches) {
  Tensor cur = input;
  for (int i = 0; i < 3; ++i) {
    Tensor conv_out;
    conv3x3(cur, fe.blocks[i], conv_out);
    relu_inplace(conv_out);
    Tensor pooled;
    maxpool2(conv_out, pooled, caches ? &(*caches)[i].argmax : nullptr);
    if (caches) {
      (*caches)[i].input = std::move(cur);
      (*caches)[i].pre_pool = std::move(conv_out);
    }
    cur = std::move(pooled);
  }
  return cur;
}

// Backward through one block given d(pooled); returns d(input) and
// accumulates weight gradients.
void block_backward(const ConvBlock& blk, const ConvCache& cache,
                    const Tensor& d_pooled, ConvBlock& grad, Tensor& d_input) {
  // maxpool: route gradients to the argmax positions.
  Tensor d_pre(cache.pre_pool.c, cache.pre_pool.h, cache.pre_pool.w);
  for (std::size_t i = 0; i < d_pooled.v.size(); ++i) {
    d_pre.v[cache.argmax[i]] += d_pooled.v[i];
  }
  // relu.
  for (std::size_t i = 0; i < d_pre.v.size(); ++i) {
    if (cache.pre_pool.v[i] <= 0.0) d_pre.v[i] = 0.0;
  }

  // conv: bias, weight, and input gradients.
  const Tensor& in = cache.input;
  const int H = in.h, W = in.w;
  d_input = Tensor(in.c, H, W);
  for (int oc = 0; oc < blk.out_ch; ++oc) {
    const double* dp = d_pre.plane(oc);
    double bsum = 0.0;
    for (int i = 0; i < H * W; ++i) bsum += dp[i];
    grad.b[oc] += bsum;

    for (int ic = 0; ic < blk.in_ch; ++ic) {
      const double* ip = in.plane(ic);
      double* dip = d_input.plane(ic);
      double* gw = grad.w.data() + (static_cast<std::size_t>(oc) * blk.in_ch + ic) * 9;
      const double* wk = blk.w.data() + (static_cast<std::size_t>(oc) * blk.in_ch + ic) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const int dy = ky - 1, dx = kx - 1;
          const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
          const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
          double wsum = 0.0;
          const double wv = wk[ky * 3 + kx];
          for (int y = y0; y < y1; ++y) {
            const double* drow = dp + static_cast<std::size_t>(y) * W;
            const double* irow = ip + static_cast<std::size_t>(y + dy) * W + dx;
            double* dirow = dip + static_cast<std::size_t>(y + dy) * W + dx;
            for (int x = x0; x < x1; ++x) {
              wsum += drow[x] * irow[x];
              dirow[x] += wv * drow[x];
            }
          }
          gw[ky * 3 + kx] += wsum;
        }
      }
    }
  }
}

// --- Adam / SGD-momentum state ----------------------------------------------

struct OptimizerState {
  Hyperparams::Optimizer kind = Hyperparams::Optimizer::adam;
  double lr = 1e-3;
  long step = 0;
  std::vector<std::vector<double>> m, v;  // per parameter tensor

  void init(Hyperparams::Optimizer k, double learning_rate,
            const std::vector<std::size_t>& sizes) {
    kind = k;
    lr = learning_rate;
    step = 0;
    m.clear();
    v.clear();
    for (std::size_t s : sizes) {
      m.emplace_back(s, 0.0);
      if (k == Hyperparams::Optimizer::adam) v.emplace_back(s, 0.0);
    }
  }

  void apply(std::size_t slot, std::span<double> params, std::span<const double> grads) {
    if (kind == Hyperparams::Optimizer::adam) {
      constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
      auto& ms = m[slot];
      auto& vs = v[slot];
      for (std::size_t i = 0; i < params.size(); ++i) {
        ms[i] = b1 * ms[i] + (1.0 - b1) * grads[i];
        vs[i] = b2 * vs[i] + (1.0 - b2) * grads[i] * grads[i];
        params[i] -= lr * (ms[i] / c1) / (std::sqrt(vs[i] / c2) + eps);
      }
    } else {
      constexpr double momentum = 0.9;
      auto& vel = m[slot];
      for (std::size_t i = 0; i < params.size(); ++i) {
        vel[i] = momentum * vel[i] + grads[i];
        params[i] -= lr * vel[i];
      }
    }
  }
};

// --- dense head helpers -------------------------------------------------------

void head_forward_acts(const RegressionHead& head, std::span<const double> input,
                       std::vector<std::vector<double>>& acts) {
  acts.resize(head.layers.size());
  std::span<const double> cur = input;
  for (std::size_t li = 0; li < head.layers.size(); ++li) {
    const DenseLayer& L = head.layers[li];
    auto& out = acts[li];
    out.assign(static_cast<std::size_t>(L.out), 0.0);
    for (int o = 0; o < L.out; ++o) {
      const double* wr = L.w.data() + static_cast<std::size_t>(o) * L.in;
      double acc = L.b[o];
      for (int i = 0; i < L.in; ++i) acc += wr[i] * cur[i];
      out[o] = acc;
    }
    if (li + 1 < head.layers.size()) {
      for (double& v : out) v = v > 0.0 ? v : 0.0;  // ReLU
    } else {
      out[0] = sigmoid(out[0]);
    }
    cur = out;
  }
}

// Backward for one sample; d_pred is dL/d(sigmoid output). Gradients are
// accumulated into `grads` (same shapes as the head layers).
void head_backward(const RegressionHead& head, std::span<const double> input,
                   const std::vector<std::vector<double>>& acts, double d_pred,
                   std::vector<DenseLayer>& grads) {
  const std::size_t n_layers = head.layers.size();
  const double s = acts.back()[0];
  std::vector<double> delta{d_pred * s * (1.0 - s)};  // through the sigmoid

  for (std::size_t li = n_layers; li-- > 0;) {
    const DenseLayer& L = head.layers[li];
    DenseLayer& G = grads[li];
    const std::span<const double> in_act =
        li == 0 ? input : std::span<const double>(acts[li - 1]);

    std::vector<double> d_in(static_cast<std::size_t>(L.in), 0.0);
    for (int o = 0; o < L.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      G.b[o] += d;
      double* gw = G.w.data() + static_cast<std::size_t>(o) * L.in;
      const double* wr = L.w.data() + static_cast<std::size_t>(o) * L.in;
      for (int i = 0; i < L.in; ++i) {
        gw[i] += d * in_act[i];
        d_in[i] += wr[i] * d;
      }
    }
    if (li > 0) {
      // ReLU derivative via the post-activation values.
      const auto& prev = acts[li - 1];
      for (int i = 0; i < L.in; ++i) {
        if (prev[i] <= 0.0) d_in[i] = 0.0;
      }
    }
    delta = std::move(d_in);
  }
}

std::vector<DenseLayer> zero_like(const RegressionHead& head) {
  std::vector<DenseLayer> grads;
  grads.reserve(head.layers.size());
  for (const DenseLayer& L : head.layers) {
    DenseLayer g;
    g.in = L.in;
    g.out = L.out;
    g.w.assign(L.w.size(), 0.0);
    g.b.assign(L.b.size(), 0.0);
    grads.push_back(std::move(g));
  }
  return grads;
}

// --- dataset loading -----------------------------------------------------------

struct FeatureSet {
  std::vector<std::vector<double>> features;
  std::vector<double> labels;  // normalized
};

FeatureSet load_features(const FeatureExtractor& fe, const DatasetManifest& m) {
  FeatureSet set;
  set.features.resize(m.entries.size());
  set.labels.resize(m.entries.size());
  parallel_for(m.entries.size(), [&](std::size_t i) {
    const ImageRGB img = load_image(m.resolve(m.entries[i]));
    set.features[i] = extract_features(fe, img);
    set.labels[i] = normalize_label(m.entries[i].angle_deg);
  });
  return set;
}

}  // namespace

// --- public: extractor ----------------------------------------------------------

std::size_t FeatureExtractor::feature_dim() const {
  const int side = kInputSize / 8;  // three 2x2 pools
  return static_cast<std::size_t>(kChannels[3]) * side * side;
}

FeatureExtractor FeatureExtractor::random(std::uint64_t seed) {
  FeatureExtractor fe;
  Rng rng(mix_seed(seed, 0xfe));
  for (int i = 0; i < 3; ++i) {
    ConvBlock& blk = fe.blocks[i];
    blk.in_ch = kChannels[i];
    blk.out_ch = kChannels[i + 1];
    blk.w.resize(static_cast<std::size_t>(blk.out_ch) * blk.in_ch * 9);
    blk.b.assign(static_cast<std::size_t>(blk.out_ch), 0.0);
    he_init(blk.w, blk.in_ch * 9, rng);
  }
  fe.frozen = true;
  return fe;
}

namespace {

// Exact area-average resampling of one channel to 128x128, in doubles.
std::vector<double> area_resize_channel(const std::vector<double>& src, int sw, int sh,
                                        int dw, int dh) {
  auto resample_axis = [](const std::vector<double>& in, int count, int stride,
                          int src_len, int dst_len, std::vector<double>& out,
                          int out_stride) {
    const double scale = static_cast<double>(src_len) / dst_len;
    for (int d = 0; d < dst_len; ++d) {
      const double lo = d * scale;
      const double hi = (d + 1) * scale;
      const int k0 = static_cast<int>(std::floor(lo));
      const int k1 = std::min(src_len - 1, static_cast<int>(std::ceil(hi)) - 1);
      for (int row = 0; row < count; ++row) {
        double acc = 0.0;
        for (int k = k0; k <= k1; ++k) {
          const double overlap =
              std::min(hi, static_cast<double>(k + 1)) - std::max(lo, static_cast<double>(k));
          if (overlap > 0.0) acc += overlap * in[static_cast<std::size_t>(row) * stride + k];
        }
        out[static_cast<std::size_t>(row) * out_stride + d] = acc / scale;
      }
    }
  };

  // Horizontal pass: sh rows of length sw -> dw.
  std::vector<double> mid(static_cast<std::size_t>(sh) * dw, 0.0);
  resample_axis(src, sh, sw, sw, dw, mid, dw);

  // Vertical pass: operate on columns; transpose views via strides.
  std::vector<double> mid_t(static_cast<std::size_t>(dw) * sh, 0.0);
  for (int y = 0; y < sh; ++y) {
    for (int x = 0; x < dw; ++x) {
      mid_t[static_cast<std::size_t>(x) * sh + y] = mid[static_cast<std::size_t>(y) * dw + x];
    }
  }
  std::vector<double> out_t(static_cast<std::size_t>(dw) * dh, 0.0);
  resample_axis(mid_t, dw, sh, sh, dh, out_t, dh);

  std::vector<double> out(static_cast<std::size_t>(dh) * dw, 0.0);
  for (int x = 0; x < dw; ++x) {
    for (int y = 0; y < dh; ++y) {
      out[static_cast<std::size_t>(y) * dw + x] = out_t[static_cast<std::size_t>(x) * dh + y];
    }
  }
  return out;
}

}  // namespace

std::vector<double> preprocess_input(const ImageRGB& img) {
  const int D = FeatureExtractor::kInputSize;
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;

  std::array<std::vector<double>, 3> channels;
  for (int c = 0; c < 3; ++c) {
    channels[c].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      channels[c][i] = img.data[i * 3 + c];
    }
    channels[c] = area_resize_channel(channels[c], img.width, img.height, D, D);
  }

  std::vector<double> out(static_cast<std::size_t>(D) * D);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double gray = 0.299 * channels[0][i] + 0.587 * channels[1][i] + 0.114 * channels[2][i];
    out[i] = gray / 255.0;
  }
  return out;
}

std::vector<double> extract_features(const FeatureExtractor& fe, const ImageRGB& img) {
  Tensor input(1, FeatureExtractor::kInputSize, FeatureExtractor::kInputSize);
  input.v = preprocess_input(img);
  const Tensor features = extractor_forward(fe, input, nullptr);
  return features.v;
}

// --- public: head ------------------------------------------------------------

std::size_t RegressionHead::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& L : layers) n += L.w.size() + L.b.size();
  return n;
}

RegressionHead RegressionHead::make(const std::vector<int>& dims, std::uint64_t seed) {
  if (dims.size() < 2 || dims.back() != 1) {
    throw Error(Errc::dimension_mismatch, "head dims must end in a single output");
  }
  RegressionHead head;
  Rng rng(mix_seed(seed, 0x4ead));
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    DenseLayer L;
    L.in = dims[i];
    L.out = dims[i + 1];
    L.w.resize(static_cast<std::size_t>(L.in) * L.out);
    L.b.assign(static_cast<std::size_t>(L.out), 0.0);
    const bool is_output = i + 2 == dims.size();
    if (is_output) {
      xavier_init(L.w, L.in, L.out, rng);
    } else {
      he_init(L.w, L.in, rng);
    }
    head.layers.push_back(std::move(L));
  }
  return head;
}

RegressionHead RegressionHead::standard(int input_dim, std::uint64_t seed) {
  return make({input_dim, 128, 64, 64, 64, 1}, seed);
}

double forward(const RegressionHead& head, std::span<const double> features) {
  if (head.layers.empty() ||
      features.size() != static_cast<std::size_t>(head.layers.front().in)) {
    throw Error(Errc::dimension_mismatch, "feature length does not match the head");
  }
  std::vector<std::vector<double>> acts;
  head_forward_acts(head, features, acts);
  return acts.back()[0];
}

double mse_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) {
    throw Error(Errc::length_mismatch, "pred/target lengths differ");
  }
  if (pred.empty()) {
    throw Error(Errc::empty_input, "mse over empty sequences");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

void Hyperparams::validate() const {
  if (!(learning_rate > 0.0)) throw Error(Errc::out_of_range, "learning_rate must be > 0");
  if (batch_size < 1) throw Error(Errc::out_of_range, "batch_size must be >= 1");
  if (epochs < 1) throw Error(Errc::out_of_range, "epochs must be >= 1");
}

// --- public: pretraining -------------------------------------------------------

FeatureExtractor pretrain_features(const DatasetManifest& aux, int bins,
                                   const Hyperparams& h, PretrainStats* stats) {
  h.validate();
  if (aux.entries.empty()) throw Error(Errc::empty_dataset, "aux manifest is empty");
  if (bins < 2) throw Error(Errc::out_of_range, "bins must be >= 2");

  // Preprocess once; floats keep the cache small and pretraining does not
  // need the extra precision.
  const std::size_t n = aux.entries.size();
  const int side = FeatureExtractor::kInputSize;
  std::vector<std::vector<float>> inputs(n);
  std::vector<int> bin_of(n);
  parallel_for(n, [&](std::size_t i) {
    const ImageRGB img = load_image(aux.resolve(aux.entries[i]));
    const std::vector<double> pre = preprocess_input(img);
    inputs[i].assign(pre.begin(), pre.end());
    const double norm = normalize_label(aux.entries[i].angle_deg);
    bin_of[i] = std::min(bins - 1, static_cast<int>(norm * bins));
  });

  FeatureExtractor fe = FeatureExtractor::random(h.seed);
  fe.frozen = false;

  DenseLayer classifier;
  classifier.in = static_cast<int>(fe.feature_dim());
  classifier.out = bins;
  classifier.w.resize(static_cast<std::size_t>(classifier.in) * bins);
  classifier.b.assign(static_cast<std::size_t>(bins), 0.0);
  {
    Rng rng(mix_seed(h.seed, 0xc1a55));
    xavier_init(classifier.w, classifier.in, classifier.out, rng);
  }

  // Every 10th sample is held out to measure bin accuracy.
  std::vector<std::size_t> train_idx, holdout_idx;
  for (std::size_t i = 0; i < n; ++i) {
    (i % 10 == 9 ? holdout_idx : train_idx).push_back(i);
  }
  if (train_idx.empty()) train_idx = holdout_idx;

  OptimizerState opt;
  std::vector<std::size_t> sizes;
  for (const ConvBlock& blk : fe.blocks) {
    sizes.push_back(blk.w.size());
    sizes.push_back(blk.b.size());
  }
  sizes.push_back(classifier.w.size());
  sizes.push_back(classifier.b.size());
  opt.init(h.optimizer, h.learning_rate, sizes);

  Rng shuffle_rng(mix_seed(h.seed, 0x5471));
  std::vector<double> logits(static_cast<std::size_t>(bins));
  std::vector<double> probs(static_cast<std::size_t>(bins));

  auto forward_sample = [&](std::size_t i, std::array<ConvCache, 3>* caches,
                            Tensor* features_out) {
    Tensor input(1, side, side);
    for (std::size_t k = 0; k < input.v.size(); ++k) input.v[k] = inputs[i][k];
    Tensor features = extractor_forward(fe, input, caches);
    for (int o = 0; o < bins; ++o) {
      const double* wr = classifier.w.data() + static_cast<std::size_t>(o) * classifier.in;
      double acc = classifier.b[o];
      for (int k = 0; k < classifier.in; ++k) acc += wr[k] * features.v[k];
      logits[o] = acc;
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (int o = 0; o < bins; ++o) {
      probs[o] = std::exp(logits[o] - peak);
      z += probs[o];
    }
    for (int o = 0; o < bins; ++o) probs[o] /= z;
    if (features_out) *features_out = std::move(features);
  };

  double epoch_ce = 0.0;
  for (int epoch = 0; epoch < h.epochs; ++epoch) {
    shuffle_rng.shuffle(train_idx);
    epoch_ce = 0.0;

    for (std::size_t start = 0; start < train_idx.size();
         start += static_cast<std::size_t>(h.batch_size)) {
      const std::size_t stop =
          std::min(train_idx.size(), start + static_cast<std::size_t>(h.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(stop - start);

      std::array<ConvBlock, 3> conv_grads;
      for (int bkt = 0; bkt < 3; ++bkt) {
        conv_grads[bkt] = fe.blocks[bkt];
        std::fill(conv_grads[bkt].w.begin(), conv_grads[bkt].w.end(), 0.0);
        std::fill(conv_grads[bkt].b.begin(), conv_grads[bkt].b.end(), 0.0);
      }
      std::vector<double> cls_gw(classifier.w.size(), 0.0);
      std::vector<double> cls_gb(classifier.b.size(), 0.0);

      for (std::size_t s = start; s < stop; ++s) {
        const std::size_t i = train_idx[s];
        std::array<ConvCache, 3> caches;
        Tensor features;
        forward_sample(i, &caches, &features);

        const int label = bin_of[i];
        epoch_ce += -std::log(std::max(probs[label], 1e-300));

        // Softmax cross-entropy gradient on the logits.
        Tensor d_features(features.c, features.h, features.w);
        for (int o = 0; o < bins; ++o) {
          const double dlogit = (probs[o] - (o == label ? 1.0 : 0.0)) * inv_batch;
          cls_gb[o] += dlogit;
          double* gw = cls_gw.data() + static_cast<std::size_t>(o) * classifier.in;
          const double* wr = classifier.w.data() + static_cast<std::size_t>(o) * classifier.in;
          for (int k = 0; k < classifier.in; ++k) {
            gw[k] += dlogit * features.v[k];
            d_features.v[k] += wr[k] * dlogit;
          }
        }

        Tensor d_cur = std::move(d_features);
        for (int bkt = 2; bkt >= 0; --bkt) {
          Tensor d_prev;
          block_backward(fe.blocks[bkt], caches[bkt], d_cur, conv_grads[bkt], d_prev);
          d_cur = std::move(d_prev);
        }
      }

      ++opt.step;
      std::size_t slot = 0;
      for (int bkt = 0; bkt < 3; ++bkt) {
        opt.apply(slot++, fe.blocks[bkt].w, conv_grads[bkt].w);
        opt.apply(slot++, fe.blocks[bkt].b, conv_grads[bkt].b);
      }
      opt.apply(slot++, classifier.w, cls_gw);
      opt.apply(slot++, classifier.b, cls_gb);
    }

    epoch_ce /= static_cast<double>(train_idx.size());
    if (!std::isfinite(epoch_ce)) {
      throw Error(Errc::non_finite_loss, "pretraining diverged");
    }
  }

  if (stats) {
    stats->final_train_ce = epoch_ce;
    int correct = 0;
    for (std::size_t i : holdout_idx) {
      forward_sample(i, nullptr, nullptr);
      const int pred = static_cast<int>(
          std::max_element(probs.begin(), probs.end()) - probs.begin());
      if (pred == bin_of[i]) ++correct;
    }
    stats->holdout_accuracy =
        holdout_idx.empty() ? 0.0
                            : static_cast<double>(correct) / static_cast<double>(holdout_idx.size());
  }

  fe.frozen = true;
  return fe;
}

// --- public: training -----------------------------------------------------------

std::pair<RegressionModel, TrainReport> train(const FeatureExtractor& fe,
                                              const DatasetManifest& train_m,
                                              const DatasetManifest& val_m,
                                              const Hyperparams& h) {
  h.validate();
  if (!fe.frozen) {
    throw std::logic_error("train() requires a frozen feature extractor");
  }
  if (train_m.entries.empty() || val_m.entries.empty()) {
    throw Error(Errc::empty_dataset, "train and val manifests must be non-empty");
  }

  const auto t0 = std::chrono::steady_clock::now();
  const FeatureSet train_set = load_features(fe, train_m);
  const FeatureSet val_set = load_features(fe, val_m);

  RegressionHead head = RegressionHead::standard(static_cast<int>(fe.feature_dim()), h.seed);

  OptimizerState opt;
  std::vector<std::size_t> sizes;
  for (const DenseLayer& L : head.layers) {
    sizes.push_back(L.w.size());
    sizes.push_back(L.b.size());
  }
  opt.init(h.optimizer, h.learning_rate, sizes);

  Rng shuffle_rng(mix_seed(h.seed, 0x7e41));
  std::vector<std::size_t> order(train_set.features.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainReport report;
  std::vector<std::vector<double>> acts;

  for (int epoch = 0; epoch < h.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_sse = 0.0;

    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(h.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(h.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(stop - start);

      std::vector<DenseLayer> grads = zero_like(head);
      for (std::size_t s = start; s < stop; ++s) {
        const std::size_t i = order[s];
        head_forward_acts(head, train_set.features[i], acts);
        const double pred = acts.back()[0];
        const double err = pred - train_set.labels[i];
        epoch_sse += err * err;
        head_backward(head, train_set.features[i], acts, 2.0 * err * inv_batch, grads);
      }

      ++opt.step;
      std::size_t slot = 0;
      for (std::size_t li = 0; li < head.layers.size(); ++li) {
        opt.apply(slot++, head.layers[li].w, grads[li].w);
        opt.apply(slot++, head.layers[li].b, grads[li].b);
      }
    }

    const double train_loss = epoch_sse / static_cast<double>(order.size());
    if (!std::isfinite(train_loss)) {
      throw Error(Errc::non_finite_loss, "training diverged at epoch " +
                                             std::to_string(epoch));
    }

    double val_sse = 0.0;
    for (std::size_t i = 0; i < val_set.features.size(); ++i) {
      head_forward_acts(head, val_set.features[i], acts);
      const double err = acts.back()[0] - val_set.labels[i];
      val_sse += err * err;
    }
    const double val_loss = val_sse / static_cast<double>(val_set.features.size());
    if (!std::isfinite(val_loss)) {
      throw Error(Errc::non_finite_loss, "validation loss diverged");
    }

    report.train_loss.push_back(train_loss);
    report.val_loss.push_back(val_loss);
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RegressionModel model{fe, std::move(head)};
  return {std::move(model), std::move(report)};
}

AngleEstimate predict_angle(const RegressionModel& model, const ImageRGB& img) {
  const std::vector<double> features = extract_features(model.extractor, img);
  const double normalized = forward(model.head, features);

  AngleEstimate est;
  est.theta_deg = denormalize_label(normalized);
  est.method = EstimatorMethod::model;
  return est;
}

// --- public: gradient check ------------------------------------------------------

double grad_check(const RegressionHead& head, std::span<const double> features,
                  double target, double eps) {
  // Analytic gradients for the single-sample loss (pred - target)^2.
  std::vector<std::vector<double>> acts;
  head_forward_acts(head, features, acts);
  std::vector<DenseLayer> grads = zero_like(head);
  head_backward(head, features, acts, 2.0 * (acts.back()[0] - target), grads);

  RegressionHead probe = head;

  // The ReLU activation pattern at a probe point. A finite-difference step
  // that flips a unit across its kink compares the analytic one-sided
  // derivative against a secant spanning the kink, so such probes rerun
  // with a smaller step.
  std::vector<std::uint8_t> base_pattern, pattern_p, pattern_m;
  auto loss_at = [&](std::vector<std::uint8_t>* pattern) {
    head_forward_acts(probe, features, acts);
    if (pattern) {
      pattern->clear();
      for (std::size_t li = 0; li + 1 < acts.size(); ++li) {
        for (double v : acts[li]) pattern->push_back(v > 0.0 ? 1 : 0);
      }
    }
    const double d = acts.back()[0] - target;
    return d * d;
  };
  loss_at(&base_pattern);

  constexpr double kAbsFloor = 1e-8;
  double worst = 0.0;
  for (std::size_t li = 0; li < head.layers.size(); ++li) {
    auto check_array = [&](std::vector<double>& params, const std::vector<double>& analytic) {
      for (std::size_t k = 0; k < params.size(); ++k) {
        const double saved = params[k];
        double step = eps;
        double numeric = 0.0;
        for (int attempt = 0; attempt < 5; ++attempt) {
          params[k] = saved + step;
          const double lp = loss_at(&pattern_p);
          params[k] = saved - step;
          const double lm = loss_at(&pattern_m);
          params[k] = saved;
          numeric = (lp - lm) / (2.0 * step);
          if (pattern_p == base_pattern && pattern_m == base_pattern) break;
          step /= 16.0;
        }

        const double a = analytic[k];
        double err;
        if (std::abs(a) <= kAbsFloor && std::abs(numeric) <= kAbsFloor) {
          err = std::abs(a - numeric);
        } else {
          err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-12});
        }
        worst = std::max(worst, err);
      }
    };
    check_array(probe.layers[li].w, grads[li].w);
    check_array(probe.layers[li].b, grads[li].b);
  }
  return worst;
}

}  // namespace markerlens
