#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gaa/diffusion.hpp"
#include "gaa/metrics.hpp"
#include "gaa/model.hpp"

namespace gaa {

struct SplitSpec {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Row indices into the labeled compound set, each list sorted ascending.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

inline constexpr std::size_t kMinSamplesPerClass = 10;

// Per class: shuffle with the seed, take round(n*train) then round(n*val)
// and leave the rest for test. Needs at least 10 samples of each class.
Split stratified_split(std::span<const int> labels, const SplitSpec& spec);

// w_c = n / (2 n_c), so the sample-weighted mean weight is 1.
std::array<double, 2> class_weights(std::span<const int> labels);

enum class ClassWeightMode { inverse_frequency, none };

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::size_t step = 0;
};

// One bias-corrected Adam update. State is sized on first use.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
               const AdamConfig& cfg);

struct TrainConfig {
  AdamConfig adam;
  std::size_t max_epochs = 500;
  std::size_t patience = 30;
  double gamma = 0.5;
  std::size_t batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 0;
  ClassWeightMode class_weight_mode = ClassWeightMode::inverse_frequency;
  // Sum per-compound gradients in compound order regardless of threading.
  bool deterministic = true;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double lc = 0.0;
  double lr_loss = 0.0;
  double val_loss = 0.0;  // weighted classification loss on validation
  double val_acc = 0.0;
  double val_f1 = 0.0;
  double val_aupr = 0.0;
  bool improved = false;
};

std::string to_json_line(const EpochLog& e);

// Samples prepared for the model: one augmented feature matrix per compound.
struct LabeledSamples {
  std::span<const AugmentedFeatures> features;
  std::span<const int> labels;
};

struct TrainResult {
  ModelParams best;
  std::size_t best_epoch = 0;
  double best_val_f1 = 0.0;
  std::vector<EpochLog> log;
  std::array<double, 2> class_weights{1.0, 1.0};
  bool diverged = false;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Adam on L = Lc + gamma * Lr averaged over training compounds. After each
// epoch the validation set is scored; the best checkpoint is the one with the
// highest validation F1 (ties broken by lower validation loss). Training stops
// once more than `patience` consecutive epochs fail to improve.
TrainResult train_gaa(const GraphContext& ctx, const ModelConfig& model_cfg, const TrainConfig& cfg,
                      const LabeledSamples& data, const Split& split, const EpochCallback& on_epoch = {});

// p(positive) for each compound.
std::vector<double> predict_positive(const ModelParams& params, const GraphContext& ctx, const ModelConfig& cfg,
                                     std::span<const AugmentedFeatures> features);

}  // namespace gaa
