#include "gaa/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include <json.hpp>

#include "gaa/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gaa {

void SplitSpec::validate() const {
  if (train < 0 || val < 0 || test < 0) throw InputError("split ratios must be non-negative");
  if (std::abs(train + val + test - 1.0) > 1e-9) throw InputError("split ratios must sum to 1");
}

Split stratified_split(std::span<const int> labels, const SplitSpec& spec) {
  spec.validate();
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw InputError("stratified_split: labels must be 0 or 1");
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  for (int c = 0; c < 2; ++c)
    if (by_class[static_cast<std::size_t>(c)].size() < kMinSamplesPerClass)
      throw InputError("stratified_split: class " + std::to_string(c) + " has " +
                       std::to_string(by_class[static_cast<std::size_t>(c)].size()) +
                       " samples; stratification needs at least " + std::to_string(kMinSamplesPerClass) +
                       " per class");

  std::mt19937_64 rng(spec.seed);
  Split split;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const double n = static_cast<double>(members.size());
    const auto n_train = static_cast<std::size_t>(std::llround(n * spec.train));
    const auto n_val = std::min(members.size() - n_train, static_cast<std::size_t>(std::llround(n * spec.val)));
    split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.val.insert(split.val.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train),
                     members.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::array<double, 2> class_weights(std::span<const int> labels) {
  std::array<std::size_t, 2> count{0, 0};
  for (int y : labels) {
    if (y != 0 && y != 1) throw InputError("class_weights: labels must be 0 or 1");
    ++count[static_cast<std::size_t>(y)];
  }
  if (count[0] == 0 || count[1] == 0) throw InputError("class_weights: training labels contain a single class");
  const double n = static_cast<double>(labels.size());
  return {n / (2.0 * static_cast<double>(count[0])), n / (2.0 * static_cast<double>(count[1]))};
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
               const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw InputError("adam_step: parameter/gradient count mismatch");
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.emplace_back(p->rows(), p->cols());
      state.v.emplace_back(p->rows(), p->cols());
    }
  }
  if (state.m.size() != params.size()) throw InputError("adam_step: state does not match parameters");
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = grads[k];
    if (!p.same_shape(g)) throw InputError("adam_step: gradient shape mismatch");
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      p[i] -= cfg.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.eps);
    }
  }
}

void TrainConfig::validate() const {
  if (!(adam.lr > 0) || !(adam.eps > 0) || !(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1))
    throw InputError("train config: invalid Adam settings");
  if (max_epochs == 0) throw InputError("train config: max_epochs must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InputError("train config: gamma must lie in [0, 1]");
}

std::string to_json_line(const EpochLog& e) {
  auto num = [](double v) -> nlohmann::json { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
  nlohmann::ordered_json j;
  j["epoch"] = e.epoch;
  j["train_loss"] = num(e.train_loss);
  j["lc"] = num(e.lc);
  j["lr_loss"] = num(e.lr_loss);
  j["val_loss"] = num(e.val_loss);
  j["val_acc"] = num(e.val_acc);
  j["val_f1"] = num(e.val_f1);
  j["val_aupr"] = num(e.val_aupr);
  j["improved"] = e.improved;
  return j.dump();
}

namespace {

struct SampleGrad {
  double total = 0.0;
  double lc = 0.0;
  double lr = 0.0;
  std::vector<double> flat;
};

SampleGrad sample_gradient(const ModelParams& params, const GraphContext& ctx, const ModelConfig& mcfg,
                           const Tensor& xg, int label, const std::array<double, 2>& weights, double gamma,
                           std::size_t n_params) {
  ad::Tape tape;
  const auto vars = record_params(tape, params, true);
  const auto x = tape.constant(xg);
  const auto fp = forward(vars, x, ctx, mcfg);
  const auto loss = gaa_loss(fp, x, label, weights, gamma);
  tape.backward(loss.total);

  SampleGrad out;
  out.total = loss.total.value()[0];
  out.lc = loss.classification.value()[0];
  out.lr = loss.reconstruction.value()[0];
  out.flat.reserve(n_params);
  visit_params(vars, [&](const std::string&, const ad::Var& v) {
    const auto g = v.grad().data();
    out.flat.insert(out.flat.end(), g.begin(), g.end());
  });
  return out;
}

}  // namespace

std::vector<double> predict_positive(const ModelParams& params, const GraphContext& ctx, const ModelConfig& cfg,
                                     std::span<const AugmentedFeatures> features) {
  std::vector<double> out(features.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(features.size()); ++i) {
    try {
      out[static_cast<std::size_t>(i)] = predict(params, features[static_cast<std::size_t>(i)].matrix, ctx, cfg).probs[1];
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

TrainResult train_gaa(const GraphContext& ctx, const ModelConfig& model_cfg, const TrainConfig& cfg,
                      const LabeledSamples& data, const Split& split, const EpochCallback& on_epoch) {
  cfg.validate();
  model_cfg.validate();
  if (data.features.size() != data.labels.size()) throw InputError("train: features/labels length mismatch");
  if (split.train.empty() || split.val.empty()) throw InputError("train: empty train or validation split");

  std::vector<int> train_labels, val_labels;
  for (auto i : split.train) train_labels.push_back(data.labels[i]);
  for (auto i : split.val) val_labels.push_back(data.labels[i]);
  std::vector<AugmentedFeatures> val_features;
  for (auto i : split.val) val_features.push_back(data.features[i]);

  TrainResult result;
  result.class_weights =
      cfg.class_weight_mode == ClassWeightMode::inverse_frequency ? class_weights(train_labels) : std::array{1.0, 1.0};
  const auto weights = result.class_weights;

  ModelParams params = init_params(model_cfg, ctx.n_nodes, ctx.n_modules, cfg.seed);
  std::vector<Tensor*> slots;
  visit_params(params, [&](const std::string&, Tensor& t) { slots.push_back(&t); });
  const std::size_t n_params = parameter_count(params);

  result.best = params;
  double best_f1 = -1.0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  AdamState adam;
  std::mt19937_64 rng(cfg.seed ^ 0x5851f42d4c957f2dULL);

  std::vector<std::size_t> order = split.train;
  const std::size_t batch = cfg.batch_size == 0 ? order.size() : std::min(cfg.batch_size, order.size());

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    if (cfg.batch_size != 0) std::shuffle(order.begin(), order.end(), rng);

    double sum_total = 0.0, sum_lc = 0.0, sum_lr = 0.0;
    bool finite = true;
    try {
      for (std::size_t start = 0; start < order.size(); start += batch) {
        const std::size_t stop = std::min(order.size(), start + batch);
        const std::size_t count = stop - start;
        std::vector<double> grad(n_params, 0.0);
        std::vector<SampleGrad> per_sample(cfg.deterministic ? count : 0);
        std::exception_ptr failure;
        double b_total = 0.0, b_lc = 0.0, b_lr = 0.0;

#pragma omp parallel
        {
          std::vector<double> local(cfg.deterministic ? 0 : n_params, 0.0);
          double l_total = 0.0, l_lc = 0.0, l_lr = 0.0;
#pragma omp for schedule(dynamic)
          for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(count); ++k) {
            try {
              const std::size_t idx = order[start + static_cast<std::size_t>(k)];
              auto sg = sample_gradient(params, ctx, model_cfg, data.features[idx].matrix, data.labels[idx], weights,
                                        cfg.gamma, n_params);
              if (cfg.deterministic) {
                per_sample[static_cast<std::size_t>(k)] = std::move(sg);
              } else {
                for (std::size_t i = 0; i < n_params; ++i) local[i] += sg.flat[i];
                l_total += sg.total;
                l_lc += sg.lc;
                l_lr += sg.lr;
              }
            } catch (...) {
#pragma omp critical
              if (!failure) failure = std::current_exception();
            }
          }
          if (!cfg.deterministic) {
#pragma omp critical
            {
              for (std::size_t i = 0; i < n_params; ++i) grad[i] += local[i];
              b_total += l_total;
              b_lc += l_lc;
              b_lr += l_lr;
            }
          }
        }
        if (failure) std::rethrow_exception(failure);
        if (cfg.deterministic) {
          for (const auto& sg : per_sample) {
            for (std::size_t i = 0; i < n_params; ++i) grad[i] += sg.flat[i];
            b_total += sg.total;
            b_lc += sg.lc;
            b_lr += sg.lr;
          }
        }
        sum_total += b_total;
        sum_lc += b_lc;
        sum_lr += b_lr;
        if (!std::isfinite(b_total)) {
          finite = false;
          break;
        }

        std::vector<Tensor> grads;
        grads.reserve(slots.size());
        std::size_t off = 0;
        const double inv = 1.0 / static_cast<double>(count);
        for (auto* p : slots) {
          Tensor g(p->rows(), p->cols());
          for (std::size_t i = 0; i < g.size(); ++i) g[i] = grad[off + i] * inv;
          off += g.size();
          grads.push_back(std::move(g));
        }
        adam_step(slots, grads, adam, cfg.adam);
      }
    } catch (const NumericalError&) {
      finite = false;
    }

    EpochLog log;
    log.epoch = epoch;
    const double n_train = static_cast<double>(order.size());
    log.train_loss = sum_total / n_train;
    log.lc = sum_lc / n_train;
    log.lr_loss = sum_lr / n_train;
    if (!finite) {
      result.diverged = true;
      result.log.push_back(log);
      if (on_epoch) on_epoch(log);
      break;
    }

    const auto scores = predict_positive(params, ctx, model_cfg, val_features);
    double val_loss = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const int y = val_labels[i];
      const double p = y == 1 ? scores[i] : 1.0 - scores[i];
      val_loss -= weights[static_cast<std::size_t>(y)] * std::log(std::max(p, 1e-300));
    }
    log.val_loss = val_loss / static_cast<double>(scores.size());
    const auto report = evaluate_scores(scores, val_labels);
    log.val_acc = report.acc;
    log.val_f1 = report.f1;
    log.val_aupr = report.aupr;
    log.improved = log.val_f1 > best_f1 || (log.val_f1 == best_f1 && log.val_loss < best_val_loss);

    if (log.improved) {
      best_f1 = log.val_f1;
      best_val_loss = log.val_loss;
      result.best = params;
      result.best_epoch = epoch;
      result.best_val_f1 = log.val_f1;
      stale = 0;
    } else {
      ++stale;
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
    if (stale > cfg.patience) break;
  }
  return result;
}

}  // namespace gaa
