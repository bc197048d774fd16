#pragma once

// Audio backdoor pipeline: triggers synthesized from diffusion trajectories,
// SNR-controlled embedding, dataset poisoning, a linear surrogate classifier
// and benign-accuracy / attack-success metrics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "qb/audio.hpp"
#include "qb/core/errors.hpp"
#include "qb/core/numeric.hpp"
#include "qb/core/parallel.hpp"
#include "qb/core/random.hpp"
#include "qb/diffusion.hpp"

namespace qb {

struct TriggerWave {
  std::vector<double> samples;  // peak |sample| = 1
  int sample_rate = pipeline_rate;
  std::string provenance;
};

/// Linear resampling of the trajectory states to length_samples, then mean
/// removal and peak normalization.
inline TriggerWave synthesize_trigger(const Trajectory& traj, std::size_t length_samples,
                                      int sample_rate = pipeline_rate, std::string provenance = {}) {
  require(length_samples >= 2, "trigger length must be >= 2 samples");
  const auto& xs = traj.states;
  require(xs.size() >= 2, "trajectory too short for a trigger");
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  if (!(*hi > *lo)) throw InvalidInput("degenerate trigger: trajectory is constant");

  TriggerWave w;
  w.sample_rate = sample_rate;
  w.provenance = std::move(provenance);
  if (length_samples == xs.size()) {
    w.samples = xs;
  } else {
    w.samples.resize(length_samples);
    const double scale = static_cast<double>(xs.size() - 1) / static_cast<double>(length_samples - 1);
    for (std::size_t i = 0; i < length_samples; ++i) {
      const double pos = static_cast<double>(i) * scale;
      const auto k = std::min(static_cast<std::size_t>(pos), xs.size() - 2);
      const double f = pos - static_cast<double>(k);
      w.samples[i] = (1.0 - f) * xs[k] + f * xs[k + 1];
    }
  }
  double mean = 0.0;
  for (double v : w.samples) mean += v;
  mean /= static_cast<double>(w.samples.size());
  double peak = 0.0;
  for (auto& v : w.samples) {
    v -= mean;
    peak = std::max(peak, std::abs(v));
  }
  if (!(peak > 0.0)) throw InvalidInput("degenerate trigger: resampled trajectory is constant");
  for (auto& v : w.samples) v /= peak;
  return w;
}

/// Trajectory parameters for the benchmark trigger: the two reversion terms
/// (drift and transport, 0.45 each) give the literal loop an AR coefficient of
/// -0.9, which pushes trigger energy towards the Nyquist band.
inline DiffusionConfig default_trigger_config(std::size_t length_samples) {
  DiffusionConfig cfg;
  cfg.T = static_cast<int>(length_samples) - 1;
  cfg.theta = 0.45;
  cfg.beta = 0.0;
  cfg.sigma_schedule.assign(static_cast<std::size_t>(cfg.T), 0.5);
  return cfg;
}

inline DriftSpec default_trigger_drift() { return DriftSpec::vasicek(0.45, 0.0); }

inline TriggerWave make_trigger(std::uint64_t seed, std::size_t length_samples = pipeline_rate,
                                int sample_rate = pipeline_rate) {
  const DiffusionConfig cfg = default_trigger_config(length_samples);
  const Trajectory traj = reverse_sample(cfg, default_trigger_drift(), seed);
  return synthesize_trigger(traj, length_samples, sample_rate, "diffusion:vasicek:seed=" + std::to_string(seed));
}

struct EmbedInfo {
  double gain = 0.0;
  bool silent_reference = false;  // clip power was 0; full-scale power 1 used instead
};

/// x' = clamp(x + g * tiled trigger), with g chosen so the clip-to-trigger power
/// ratio equals snr_db. snr_db = +inf leaves the clip unchanged.
inline AudioClip embed_trigger(const AudioClip& clip, const TriggerWave& trig, double snr_db, EmbedInfo* info = nullptr) {
  require(!clip.samples.empty(), "cannot embed into an empty clip");
  require(!trig.samples.empty(), "empty trigger");
  require(clip.sample_rate == trig.sample_rate, "trigger and clip sample rates differ; resample the trigger first");
  require(!std::isnan(snr_db), "snr_db must not be NaN");
  AudioClip out = clip;
  EmbedInfo local;
  if (std::isinf(snr_db) && snr_db > 0.0) {
    if (info) *info = local;
    return out;
  }
  const std::size_t n = clip.samples.size();
  const std::size_t m = trig.samples.size();
  double px = 0.0;
  double pt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    px += clip.samples[i] * clip.samples[i];
    const double e = trig.samples[i % m];
    pt += e * e;
  }
  px /= static_cast<double>(n);
  pt /= static_cast<double>(n);
  if (px == 0.0) {
    px = 1.0;
    local.silent_reference = true;
  }
  require(pt > 0.0, "trigger has zero power over the clip");
  local.gain = std::sqrt(px / (pt * std::pow(10.0, snr_db / 10.0)));
  for (std::size_t i = 0; i < n; ++i)
    out.samples[i] = std::clamp(clip.samples[i] + local.gain * trig.samples[i % m], -1.0, 1.0);
  out.provenance = trig.provenance.empty() ? "trigger" : trig.provenance;
  if (info) *info = local;
  return out;
}

// ---------------------------------------------------------------------------

enum class PoisonMode { label_flip, clean_label };

inline PoisonMode parse_poison_mode(const std::string& s) {
  if (s == "label_flip") return PoisonMode::label_flip;
  if (s == "clean_label") return PoisonMode::clean_label;
  throw InvalidInput("unknown poison mode '" + s + "'");
}

inline std::string poison_mode_name(PoisonMode m) { return m == PoisonMode::label_flip ? "label_flip" : "clean_label"; }

struct PoisonConfig {
  int target_label = 3;
  double poison_rate = 0.1;
  double snr_db = 30.0;
  PoisonMode mode = PoisonMode::label_flip;
  std::uint64_t seed = 0;
};

struct LabeledDataset {
  std::vector<AudioClip> clips;
  int num_classes = 0;
  std::string split = "train";

  std::size_t count_label(int label) const {
    return static_cast<std::size_t>(
        std::count_if(clips.begin(), clips.end(), [&](const AudioClip& c) { return c.label == label; }));
  }
};

inline void validate_poison_config(const PoisonConfig& cfg, int num_classes) {
  require(cfg.poison_rate >= 0.0 && cfg.poison_rate <= 1.0, "poison_rate must lie in [0, 1]");
  require(cfg.target_label >= 0 && cfg.target_label < num_classes, "target_label outside the dataset's classes");
  require(!std::isnan(cfg.snr_db), "snr_db must not be NaN");
}

/// Union of the clean clips and triggered copies. label_flip draws
/// ceil(rate * N) non-target clips and relabels them to the target;
/// clean_label draws ceil(rate * N_target) target clips and keeps labels.
inline LabeledDataset build_poisoned_dataset(const LabeledDataset& ds, const PoisonConfig& cfg, const TriggerWave& trig) {
  validate_poison_config(cfg, ds.num_classes);
  std::vector<std::size_t> pool;
  double base = 0.0;
  for (std::size_t i = 0; i < ds.clips.size(); ++i) {
    const bool is_target = ds.clips[i].label == cfg.target_label;
    if ((cfg.mode == PoisonMode::label_flip) != is_target) pool.push_back(i);
  }
  if (cfg.mode == PoisonMode::label_flip) {
    base = static_cast<double>(ds.clips.size());
  } else {
    if (pool.empty()) throw InvalidInput("clean_label poisoning: target class has no clips");
    base = static_cast<double>(pool.size());
  }
  const auto count = static_cast<std::size_t>(std::ceil(cfg.poison_rate * base - 1e-9));
  if (count > pool.size())
    throw InvalidInput("poison_rate asks for " + std::to_string(count) + " clips but only " +
                       std::to_string(pool.size()) + " are eligible");

  Stream rng(cfg.seed, 0);
  shuffle(std::span<std::size_t>(pool), rng);
  pool.resize(count);
  std::sort(pool.begin(), pool.end());

  LabeledDataset out = ds;
  out.clips.resize(ds.clips.size() + count);
  parallel_for(count, [&](std::size_t j) {
    const AudioClip& src = ds.clips[pool[j]];
    AudioClip p = embed_trigger(src, trig, cfg.snr_db);
    p.id = src.id + "#p";
    if (cfg.mode == PoisonMode::label_flip) p.label = cfg.target_label;
    out.clips[ds.clips.size() + j] = std::move(p);
  });
  return out;
}

/// Triggered copies of every clean test clip whose label is not the target; the
/// source label is kept so the set can be audited.
inline LabeledDataset make_triggered_test(const LabeledDataset& clean_test, const TriggerWave& trig, int target_label,
                                          double snr_db) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < clean_test.clips.size(); ++i)
    if (clean_test.clips[i].label != target_label) idx.push_back(i);
  LabeledDataset out;
  out.num_classes = clean_test.num_classes;
  out.split = "test_poisoned";
  out.clips.resize(idx.size());
  parallel_for(idx.size(), [&](std::size_t j) {
    const AudioClip& src = clean_test.clips[idx[j]];
    out.clips[j] = embed_trigger(src, trig, snr_db);
    out.clips[j].id = src.id + "#p";
  });
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic chirp benchmark

struct SyntheticConfig {
  int classes = 10;
  int clips_per_class = 200;
  double duration = 1.0;
  int sample_rate = pipeline_rate;
  double noise_snr_db = 20.0;
  std::uint64_t seed = 0;
};

/// Class k is a linear chirp 200(k+1) -> 400(k+1) Hz with random amplitude and
/// phase, plus white noise at noise_snr_db below the chirp.
inline LabeledDataset make_synthetic_dataset(const SyntheticConfig& cfg) {
  require(cfg.classes >= 2 && cfg.clips_per_class >= 1, "synthetic dataset needs >= 2 classes and >= 1 clip each");
  require(cfg.duration > 0.0 && cfg.sample_rate > 0, "synthetic duration and sample rate must be positive");
  require(400.0 * cfg.classes < 0.5 * cfg.sample_rate, "highest chirp frequency exceeds Nyquist");
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration * cfg.sample_rate));
  const auto total = static_cast<std::size_t>(cfg.classes) * static_cast<std::size_t>(cfg.clips_per_class);
  LabeledDataset ds;
  ds.num_classes = cfg.classes;
  ds.clips.resize(total);
  parallel_for(total, [&](std::size_t i) {
    const int k = static_cast<int>(i) / cfg.clips_per_class;
    Stream rng(cfg.seed, i);
    const double amp = 0.3 + 0.6 * rng.uniform();
    const double phase0 = 2.0 * std::numbers::pi * rng.uniform();
    const double f0 = 200.0 * (k + 1);
    const double f1 = 400.0 * (k + 1);
    const double noise_sd = amp / std::sqrt(2.0) * std::pow(10.0, -cfg.noise_snr_db / 20.0);
    AudioClip c;
    c.sample_rate = cfg.sample_rate;
    c.label = k;
    c.id = "c" + std::to_string(k) + "_" + std::to_string(i % static_cast<std::size_t>(cfg.clips_per_class));
    c.samples.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
      const double t = static_cast<double>(s) / cfg.sample_rate;
      const double ph = 2.0 * std::numbers::pi * (f0 * t + 0.5 * (f1 - f0) * t * t / cfg.duration) + phase0;
      c.samples[s] = std::clamp(amp * std::sin(ph) + noise_sd * rng.normal(), -1.0, 1.0);
    }
    ds.clips[i] = std::move(c);
  });
  return ds;
}

/// Stratified split: round(test_fraction * n_k) clips of each class go to test.
inline std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& ds, double test_fraction,
                                                               std::uint64_t seed) {
  require(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction must lie in (0, 1)");
  std::vector<char> to_test(ds.clips.size(), 0);
  for (int k = 0; k < ds.num_classes; ++k) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.clips.size(); ++i)
      if (ds.clips[i].label == k) idx.push_back(i);
    Stream rng(seed, static_cast<std::uint64_t>(k));
    shuffle(std::span<std::size_t>(idx), rng);
    const auto m = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
    for (std::size_t j = 0; j < m; ++j) to_test[idx[j]] = 1;
  }
  LabeledDataset train, test;
  train.num_classes = test.num_classes = ds.num_classes;
  train.split = "train";
  test.split = "test_clean";
  for (std::size_t i = 0; i < ds.clips.size(); ++i) (to_test[i] ? test : train).clips.push_back(ds.clips[i]);
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Surrogate classifier

struct FeatureSet {
  Matrix x;  // one row per clip
  std::vector<int> labels;
  std::size_t padded = 0;
};

inline FeatureSet featurize(const LabeledDataset& ds, const MelFeatures& fx = default_features()) {
  require(!ds.clips.empty(), "cannot featurize an empty dataset");
  FeatureSet fs;
  fs.x = Matrix(ds.clips.size(), fx.size());
  fs.labels.resize(ds.clips.size());
  std::vector<char> padded(ds.clips.size(), 0);
  parallel_for(ds.clips.size(), [&](std::size_t i) {
    const FeatureVector v = fx(ds.clips[i]);
    std::copy(v.values.begin(), v.values.end(), fs.x.row(i).begin());
    fs.labels[i] = ds.clips[i].label;
    padded[i] = v.padded;
  });
  for (char p : padded) fs.padded += static_cast<std::size_t>(p);
  return fs;
}

struct TrainConfig {
  int epochs = 200;
  double step_size = 0.1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

struct ClassifierModel {
  int num_classes = 0;
  Matrix weights;  // num_classes x (features + 1); last column is the bias
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  TrainConfig config;
  std::vector<double> loss_history;  // full training loss before epoch 1 and after each epoch

  void scores(std::span<const double> features, std::span<double> out) const {
    const std::size_t f = feature_mean.size();
    for (int j = 0; j < num_classes; ++j) {
      const auto w = weights.row(static_cast<std::size_t>(j));
      double s = w[f];
      for (std::size_t i = 0; i < f; ++i) s += w[i] * (features[i] - feature_mean[i]) / feature_scale[i];
      out[static_cast<std::size_t>(j)] = s;
    }
  }

  /// Arg-max score; ties go to the lowest class index.
  int predict(std::span<const double> features) const {
    std::vector<double> s(static_cast<std::size_t>(num_classes));
    scores(features, s);
    return static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
  }

  double final_loss() const { return loss_history.empty() ? std::numeric_limits<double>::quiet_NaN() : loss_history.back(); }
};

namespace detail {

inline double softmax_loss(const ClassifierModel& m, const FeatureSet& fs) {
  std::vector<double> s(static_cast<std::size_t>(m.num_classes));
  double total = 0.0;
  for (std::size_t r = 0; r < fs.x.rows(); ++r) {
    m.scores(fs.x.row(r), s);
    const double top = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double v : s) z += std::exp(v - top);
    total += top + std::log(z) - s[static_cast<std::size_t>(fs.labels[r])];
  }
  return total / static_cast<double>(fs.x.rows());
}

}  // namespace detail

/// Multinomial logistic regression on standardized features, seeded mini-batch
/// gradient descent on the mean cross-entropy.
inline ClassifierModel train_classifier(const FeatureSet& fs, int num_classes, const TrainConfig& cfg) {
  require(cfg.epochs >= 0 && cfg.step_size > 0.0 && cfg.batch_size >= 1, "invalid training configuration");
  const std::size_t n = fs.x.rows();
  const std::size_t f = fs.x.cols();
  require(n > 0, "training set is empty");
  std::vector<char> seen(static_cast<std::size_t>(num_classes), 0);
  for (int y : fs.labels) {
    require(y >= 0 && y < num_classes, "label outside [0, num_classes)");
    seen[static_cast<std::size_t>(y)] = 1;
  }
  require(std::count(seen.begin(), seen.end(), 1) >= 2, "training needs at least two classes present");

  ClassifierModel m;
  m.num_classes = num_classes;
  m.config = cfg;
  m.weights = Matrix(static_cast<std::size_t>(num_classes), f + 1, 0.0);
  m.feature_mean.assign(f, 0.0);
  m.feature_scale.assign(f, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < f; ++i) m.feature_mean[i] += fs.x(r, i);
  for (auto& v : m.feature_mean) v /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < f; ++i) {
      const double d = fs.x(r, i) - m.feature_mean[i];
      m.feature_scale[i] += d * d;
    }
  for (auto& v : m.feature_scale) v = std::max(std::sqrt(v / static_cast<double>(n)), 1e-8);

  // standardized copy with a trailing 1 for the bias
  Matrix z(n, f + 1);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < f; ++i) z(r, i) = (fs.x(r, i) - m.feature_mean[i]) / m.feature_scale[i];
    z(r, f) = 1.0;
  }

  m.loss_history.push_back(detail::softmax_loss(m, fs));
  std::vector<std::size_t> order(n);
  const auto classes = static_cast<std::size_t>(num_classes);
  Matrix grad(classes, f + 1);
  std::vector<double> p(classes);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Stream rng(cfg.seed, static_cast<std::uint64_t>(epoch));
    shuffle(std::span<std::size_t>(order), rng);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      std::fill(grad.data().begin(), grad.data().end(), 0.0);
      for (std::size_t b = start; b < stop; ++b) {
        const auto row = z.row(order[b]);
        for (std::size_t j = 0; j < classes; ++j) {
          const auto w = m.weights.row(j);
          double s = 0.0;
          for (std::size_t i = 0; i <= f; ++i) s += w[i] * row[i];
          p[j] = s;
        }
        const double top = *std::max_element(p.begin(), p.end());
        double sum = 0.0;
        for (auto& v : p) sum += (v = std::exp(v - top));
        for (auto& v : p) v /= sum;
        p[static_cast<std::size_t>(fs.labels[order[b]])] -= 1.0;
        for (std::size_t j = 0; j < classes; ++j) {
          const auto g = grad.row(j);
          for (std::size_t i = 0; i <= f; ++i) g[i] += p[j] * row[i];
        }
      }
      const double step = cfg.step_size / static_cast<double>(stop - start);
      auto w = m.weights.data();
      const auto g = grad.data();
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step * g[i];
    }
    const double loss = detail::softmax_loss(m, fs);
    if (!std::isfinite(loss) || !all_finite(m.weights.data()))
      throw NumericalFailure("training diverged at epoch " + std::to_string(epoch + 1) +
                             "; reduce step_size (currently " + io::format_double(cfg.step_size) + ")");
    m.loss_history.push_back(loss);
  }
  return m;
}

inline ClassifierModel train_classifier(const LabeledDataset& ds, const TrainConfig& cfg) {
  return train_classifier(featurize(ds), ds.num_classes, cfg);
}

struct Metrics {
  double ba = 0.0;
  double asr = 0.0;
  std::size_t m = 0;  // clean test clips
  std::size_t n = 0;  // triggered test clips
  std::size_t correct = 0;
  std::size_t hits = 0;
};

inline std::vector<int> predict_all(const ClassifierModel& model, const FeatureSet& fs) {
  std::vector<int> out(fs.x.rows());
  parallel_for(out.size(), [&](std::size_t r) { out[r] = model.predict(fs.x.row(r)); });
  return out;
}

/// BA = correct clean predictions / M; ASR = triggered clips predicted as target / N.
inline Metrics evaluate(const ClassifierModel& model, const FeatureSet& clean_test, const FeatureSet& poisoned_test,
                        int target_label) {
  require(clean_test.x.rows() > 0 && poisoned_test.x.rows() > 0, "evaluation splits must be non-empty");
  for (int y : poisoned_test.labels)
    require(y != target_label, "triggered test set must only hold clips whose source label differs from the target");
  Metrics mt;
  mt.m = clean_test.x.rows();
  mt.n = poisoned_test.x.rows();
  const auto clean_pred = predict_all(model, clean_test);
  for (std::size_t i = 0; i < mt.m; ++i) mt.correct += clean_pred[i] == clean_test.labels[i];
  const auto trig_pred = predict_all(model, poisoned_test);
  for (int p : trig_pred) mt.hits += p == target_label;
  mt.ba = static_cast<double>(mt.correct) / static_cast<double>(mt.m);
  mt.asr = static_cast<double>(mt.hits) / static_cast<double>(mt.n);
  return mt;
}

inline Metrics evaluate(const ClassifierModel& model, const LabeledDataset& clean_test,
                        const LabeledDataset& poisoned_test, int target_label) {
  require(!clean_test.clips.empty() && !poisoned_test.clips.empty(), "evaluation splits must be non-empty");
  return evaluate(model, featurize(clean_test), featurize(poisoned_test), target_label);
}

// ---------------------------------------------------------------------------
// End-to-end benchmark

struct BenchmarkConfig {
  SyntheticConfig data;
  PoisonConfig poison;
  TrainConfig train;
  double test_fraction = 0.2;
  std::uint64_t trigger_seed = 0;
};

struct BenchmarkResult {
  Metrics clean;     // model trained without poisoning
  Metrics poisoned;  // model trained on the poisoned union
  std::size_t poisoned_count = 0;
};

/// Derives every sub-seed from one master seed.
inline BenchmarkConfig benchmark_config(std::uint64_t seed) {
  BenchmarkConfig cfg;
  cfg.data.seed = derive_key(seed, 1);
  cfg.poison.seed = derive_key(seed, 2);
  cfg.train.seed = derive_key(seed, 3);
  cfg.trigger_seed = derive_key(seed, 4);
  return cfg;
}

inline BenchmarkResult run_backdoor_benchmark(const BenchmarkConfig& cfg) {
  const LabeledDataset all = make_synthetic_dataset(cfg.data);
  const auto [train, test] = split_dataset(all, cfg.test_fraction, cfg.data.seed);
  const auto n = static_cast<std::size_t>(std::llround(cfg.data.duration * cfg.data.sample_rate));
  const TriggerWave trig = make_trigger(cfg.trigger_seed, n, cfg.data.sample_rate);
  const LabeledDataset poisoned = build_poisoned_dataset(train, cfg.poison, trig);
  const LabeledDataset triggered = make_triggered_test(test, trig, cfg.poison.target_label, cfg.poison.snr_db);

  const FeatureSet f_train = featurize(train);
  // clean rows first, then the triggered copies, as in the dataset itself
  FeatureSet f_union = f_train;
  if (poisoned.clips.size() > train.clips.size()) {
    const FeatureSet f_poisoned = featurize(LabeledDataset{
        {poisoned.clips.begin() + static_cast<std::ptrdiff_t>(train.clips.size()), poisoned.clips.end()},
        poisoned.num_classes, "train"});
    f_union.x = Matrix(f_train.x.rows() + f_poisoned.x.rows(), f_train.x.cols());
    std::copy(f_train.x.data().begin(), f_train.x.data().end(), f_union.x.data().begin());
    std::copy(f_poisoned.x.data().begin(), f_poisoned.x.data().end(),
              f_union.x.data().begin() + static_cast<std::ptrdiff_t>(f_train.x.data().size()));
    f_union.labels.insert(f_union.labels.end(), f_poisoned.labels.begin(), f_poisoned.labels.end());
  }

  const FeatureSet f_test = featurize(test);
  const FeatureSet f_trig = featurize(triggered);

  BenchmarkResult res;
  res.poisoned_count = poisoned.clips.size() - train.clips.size();
  const ClassifierModel clean_model = train_classifier(f_train, all.num_classes, cfg.train);
  res.clean = evaluate(clean_model, f_test, f_trig, cfg.poison.target_label);
  const ClassifierModel dirty_model = train_classifier(f_union, all.num_classes, cfg.train);
  res.poisoned = evaluate(dirty_model, f_test, f_trig, cfg.poison.target_label);
  return res;
}

}  // namespace qb
