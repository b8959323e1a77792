#include "gaa/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gaa/errors.hpp"
#include "gaa/feature_cache.hpp"
#include "gaa/hash.hpp"
#include "gaa/io.hpp"

namespace gaa {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string num17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string modules_hash(const Dataset& ds) {
  return ds.modules ? to_hex(ds.modules->content_hash()) : std::string();
}

const std::vector<int>& labels_of(const CompoundSet& c) {
  if (!c.labels) throw InputError("labels are required for this command (--labels)");
  return *c.labels;
}

std::vector<AugmentedFeatures> load_features(const RunConfig& cfg, const Dataset& ds, const AlphaGrid& grid,
                                             const RwrOptions& rwr) {
  std::optional<FeatureCache> cache;
  if (!cfg.cache_dir.empty()) cache.emplace(cfg.cache_dir);
  return augment_features_cached(ds.graph, ds.compounds, grid, rwr, cache ? &*cache : nullptr);
}

Tensor baseline_matrix(const Dataset& ds, std::span<const std::size_t> rows, double alpha, const RwrOptions& rwr) {
  Tensor x(rows.size(), ds.graph.n_nodes());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(rows.size()); ++k) {
    try {
      const auto r = static_cast<std::size_t>(k);
      const auto f = baseline_features(ds.graph, ds.compounds.targets[rows[r]], alpha, rwr);
      std::copy(f.begin(), f.end(), x.row(r).begin());
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return x;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return rows;
}

std::vector<int> pick(std::span<const int> v, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(v[r]);
  return out;
}

// p(positive) for the given compounds under a loaded checkpoint.
std::vector<double> score(const RunConfig& cfg, const Dataset& ds, const Checkpoint& ck,
                          std::span<const std::size_t> rows) {
  if (ck.kind == ModelKind::baseline) {
    const Tensor x = baseline_matrix(ds, rows, ck.alphas.front(), ck.rwr);
    std::vector<double> out(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) out[r] = baseline_predict(ck.linear, x.row(r));
    return out;
  }
  const auto subset = ds.compounds.select(rows);
  Dataset view{ds.graph, ds.modules, subset, {}};
  const auto features = load_features(cfg, view, AlphaGrid(ck.alphas), ck.rwr);
  const auto ctx = GraphContext::build(ds.graph, *ds.modules);
  return predict_positive(ck.params, ctx, ck.model, features);
}

Checkpoint open_checkpoint(const Dataset& ds, const fs::path& path) {
  const std::size_t n_modules = ds.modules ? ds.modules->n_modules() : 0;
  auto ck = load_checkpoint(path, ds.graph.n_nodes(), n_modules, to_hex(ds.graph.content_hash()), modules_hash(ds));
  if (ck.kind == ModelKind::gaa && !ds.modules) throw InputError("a GAA checkpoint needs the supermodules (--gmt)");
  return ck;
}

void write_log(const fs::path& path, const std::vector<EpochLog>& log) {
  std::string text;
  for (const auto& e : log) text += to_json_line(e) + "\n";
  write_file_atomic(path, text);
}

}  // namespace

void RunConfig::check_paths(std::initializer_list<const fs::path*> required) const {
  for (const auto* p : required) {
    if (p->empty()) throw InputError("missing required input path");
    if (!fs::exists(*p)) throw InputError("no such file: " + p->string());
  }
  AlphaGrid::parse(alphas);
  if (!(rwr.tol > 0)) throw InputError("--tol must be positive");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw InputError("--threshold must lie in [0, 1]");
  if (!(baseline_alpha > 0.0 && baseline_alpha <= 1.0)) throw InputError("--baseline-alpha must lie in (0, 1]");
  if (!(logistic.l2 >= 0.0)) throw InputError("--l2 must be non-negative");
  split.validate();
  train.validate();
}

ordered_json to_json(const RunConfig& cfg) {
  ordered_json j;
  j["edges"] = cfg.edges.string();
  j["features"] = cfg.features.string();
  j["labels"] = cfg.labels.string();
  j["gmt"] = cfg.gmt.string();
  j["model_kind"] = cfg.kind == ModelKind::gaa ? "gaa" : "baseline";
  j["alphas"] = cfg.alphas;
  j["rwr"] = {{"tol", cfg.rwr.tol}, {"max_iter", cfg.rwr.max_iter}};
  j["model"] = to_json(cfg.model);
  const auto& t = cfg.train;
  j["train"] = {{"lr", t.adam.lr},
                {"beta1", t.adam.beta1},
                {"beta2", t.adam.beta2},
                {"eps", t.adam.eps},
                {"max_epochs", t.max_epochs},
                {"patience", t.patience},
                {"gamma", t.gamma},
                {"batch_size", t.batch_size},
                {"class_weights", t.class_weight_mode == ClassWeightMode::none ? "none" : "inverse_frequency"},
                {"deterministic", t.deterministic}};
  j["split"] = {{"train", cfg.split.train}, {"val", cfg.split.val}, {"test", cfg.split.test}, {"seed", cfg.split.seed}};
  j["baseline"] = {{"alpha", cfg.baseline_alpha}, {"l2", cfg.logistic.l2}, {"gradient_tol", cfg.logistic.gradient_tol}};
  j["seed"] = cfg.seed;
  j["threshold"] = cfg.threshold;
  return j;
}

Dataset load_dataset(const RunConfig& cfg, bool require_labels) {
  Dataset ds{build_graph(parse_edge_tsv(read_text_file(cfg.edges))), std::nullopt, {}, {}};
  ds.compounds = parse_compound_tsv(read_text_file(cfg.features), ds.graph, &ds.stats);
  if (ds.compounds.size() == 0) throw InputError("no compounds in " + cfg.features.string());
  if (!cfg.gmt.empty()) ds.modules = load_supermodules(read_text_file(cfg.gmt), ds.graph);
  if (!cfg.labels.empty()) {
    attach_labels(ds.compounds, parse_label_tsv(read_text_file(cfg.labels)), require_labels);
  } else if (require_labels) {
    throw InputError("labels are required for this command (--labels)");
  }
  if (ds.stats.dropped_targets > 0)
    std::fprintf(stderr, "warning: %zu compound targets are not in the graph and were dropped\n",
                 ds.stats.dropped_targets);
  return ds;
}

DiffuseSummary cmd_diffuse(const RunConfig& cfg) {
  cfg.check_paths({&cfg.edges, &cfg.features});
  if (cfg.out.empty()) throw InputError("diffuse needs an output cache directory (--out)");
  const auto ds = load_dataset(cfg, false);
  const auto grid = AlphaGrid::parse(cfg.alphas);
  const FeatureCache cache(cfg.out);
  DiffuseSummary s;
  augment_features_cached(ds.graph, ds.compounds, grid, cfg.rwr, &cache, &s.cache_hits);
  s.compounds = ds.compounds.size();
  s.dropped_targets = ds.stats.dropped_targets;
  s.graph_hash = to_hex(ds.graph.content_hash());
  s.grid = grid.to_string();
  return s;
}

TrainSummary cmd_train(const RunConfig& cfg) {
  cfg.check_paths({&cfg.edges, &cfg.features, &cfg.labels});
  if (cfg.kind == ModelKind::gaa) cfg.check_paths({&cfg.gmt});
  if (cfg.out.empty()) throw InputError("train needs an output directory (--out)");
  const auto ds = load_dataset(cfg, true);
  const auto& labels = labels_of(ds.compounds);
  const auto split = stratified_split(labels, cfg.split);
  fs::create_directories(cfg.out);

  TrainSummary s;
  s.checkpoint_path = cfg.out / "checkpoint.gaa";
  s.log_path = cfg.out / "train_log.jsonl";
  s.config_path = cfg.out / "run_config.json";
  auto resolved = to_json(cfg);
  resolved["out"] = cfg.out.string();
  write_file_atomic(s.config_path, resolved.dump(2) + "\n");

  Checkpoint& ck = s.checkpoint;
  ck.kind = cfg.kind;
  ck.graph_hash = to_hex(ds.graph.content_hash());
  ck.modules_hash = modules_hash(ds);
  ck.rwr = cfg.rwr;
  ck.split = cfg.split;
  ck.run_config = to_json(cfg);

  if (cfg.kind == ModelKind::gaa) {
    const auto grid = AlphaGrid::parse(cfg.alphas);
    const auto features = load_features(cfg, ds, grid, cfg.rwr);
    const auto ctx = GraphContext::build(ds.graph, *ds.modules);
    ModelConfig mc = cfg.model;
    mc.in_width = grid.size();
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    auto result = train_gaa(ctx, mc, tc, {features, labels}, split);
    s.log = std::move(result.log);
    s.diverged = result.diverged;
    write_log(s.log_path, s.log);
    if (s.diverged) throw NumericalError("training diverged at epoch " + std::to_string(s.log.back().epoch));
    ck.alphas = grid.alphas();
    ck.model = mc;
    ck.params = std::move(result.best);
    ck.class_weights = result.class_weights;
    ck.best_epoch = result.best_epoch;
  } else {
    const Tensor x_train = baseline_matrix(ds, split.train, cfg.baseline_alpha, cfg.rwr);
    const auto y_train = pick(labels, split.train);
    ck.class_weights = cfg.train.class_weight_mode == ClassWeightMode::inverse_frequency ? class_weights(y_train)
                                                                                          : std::array{1.0, 1.0};
    ck.linear = fit_logistic(x_train, y_train, ck.class_weights, cfg.logistic);
    ck.alphas = {cfg.baseline_alpha};
    ck.best_epoch = 1;

    const Tensor x_val = baseline_matrix(ds, split.val, cfg.baseline_alpha, cfg.rwr);
    const auto y_val = pick(labels, split.val);
    std::vector<double> val_scores(split.val.size());
    for (std::size_t r = 0; r < split.val.size(); ++r) val_scores[r] = baseline_predict(ck.linear, x_val.row(r));
    EpochLog e;
    e.epoch = 1;
    e.train_loss = logistic_objective(ck.linear, x_train, y_train, ck.class_weights);
    e.lc = e.train_loss;
    LinearModel unpenalized = ck.linear;
    unpenalized.l2 = 0.0;
    e.val_loss = logistic_objective(unpenalized, x_val, y_val, ck.class_weights);
    const auto r = evaluate_scores(val_scores, y_val);
    e.val_acc = r.acc;
    e.val_f1 = r.f1;
    e.val_aupr = r.aupr;
    e.improved = true;
    s.log.push_back(e);
    write_log(s.log_path, s.log);
  }
  save_checkpoint(s.checkpoint_path, ck);
  return s;
}

EvalSubset parse_eval_subset(std::string_view s) {
  if (s == "train") return EvalSubset::train;
  if (s == "val") return EvalSubset::val;
  if (s == "test") return EvalSubset::test;
  if (s == "all") return EvalSubset::all;
  throw InputError("unknown subset '" + std::string(s) + "' (train, val, test, all)");
}

std::string to_string(EvalSubset s) {
  switch (s) {
    case EvalSubset::train:
      return "train";
    case EvalSubset::val:
      return "val";
    case EvalSubset::test:
      return "test";
    case EvalSubset::all:
      break;
  }
  return "all";
}

EvalReport cmd_evaluate(const RunConfig& cfg, const fs::path& checkpoint, EvalSubset subset) {
  cfg.check_paths({&cfg.edges, &cfg.features, &cfg.labels, &checkpoint});
  const auto ds = load_dataset(cfg, true);
  const auto ck = open_checkpoint(ds, checkpoint);
  const auto& labels = labels_of(ds.compounds);
  std::vector<std::size_t> rows;
  if (subset == EvalSubset::all) {
    rows = all_rows(labels.size());
  } else {
    const auto split = stratified_split(labels, ck.split);
    rows = subset == EvalSubset::train ? split.train : subset == EvalSubset::val ? split.val : split.test;
  }
  const auto scores = score(cfg, ds, ck, rows);
  return evaluate_scores(scores, pick(labels, rows), cfg.threshold);
}

ordered_json to_json(const EvalReport& r) {
  ordered_json j;
  j["n"] = r.n;
  j["threshold"] = r.threshold;
  j["acc"] = r.acc;
  j["f1"] = r.f1;
  j["aupr"] = std::isfinite(r.aupr) ? ordered_json(r.aupr) : ordered_json();
  j["confusion"] = {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn}, {"fn", r.confusion.fn}};
  return j;
}

std::vector<PredictionRecord> cmd_predict(const RunConfig& cfg, const fs::path& checkpoint, double threshold) {
  cfg.check_paths({&cfg.edges, &cfg.features, &checkpoint});
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw InputError("--threshold must lie in [0, 1]");
  RunConfig unlabeled = cfg;
  unlabeled.labels.clear();
  const auto ds = load_dataset(unlabeled, false);
  const auto ck = open_checkpoint(ds, checkpoint);
  const auto scores = score(cfg, ds, ck, all_rows(ds.compounds.size()));

  std::vector<PredictionRecord> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = {ds.compounds.ids[i], scores[i], 0, scores[i] >= threshold};
  std::sort(out.begin(), out.end(), [](const PredictionRecord& a, const PredictionRecord& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.compound_id < b.compound_id;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
  return out;
}

std::string format_predictions(const std::vector<PredictionRecord>& records) {
  std::string s = "rank\tcompound_id\tprobability\tflagged\n";
  for (const auto& r : records)
    s += std::to_string(r.rank) + "\t" + r.compound_id + "\t" + num17(r.probability) + "\t" + (r.flagged ? "1" : "0") +
         "\n";
  return s;
}

std::vector<PathwayRow> cmd_report(const RunConfig& cfg, const fs::path& checkpoint,
                                   const std::vector<std::string>& pathways) {
  cfg.check_paths({&cfg.edges, &cfg.features, &cfg.labels, &cfg.gmt, &checkpoint});
  RunConfig unlabeled = cfg;
  unlabeled.labels.clear();
  const auto ds = load_dataset(unlabeled, false);
  const auto ck = open_checkpoint(ds, checkpoint);
  if (ck.kind != ModelKind::gaa) throw InputError("report needs a GAA checkpoint; the baseline has no embedding");
  const auto& modules = *ds.modules;

  std::vector<std::size_t> selected;
  if (pathways.empty()) {
    selected = all_rows(modules.n_modules());
  } else {
    for (const auto& name : pathways) {
      const auto m = modules.index_of(name);
      if (!m) throw InputError("unknown pathway '" + name + "'");
      selected.push_back(*m);
    }
  }

  // Only compounds with a label take part; the rest of the feature file is ignored.
  const auto label_map = parse_label_tsv(read_text_file(cfg.labels));
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.compounds.size(); ++i)
    if (label_map.count(ds.compounds.ids[i])) rows.push_back(i);
  auto subset = ds.compounds.select(rows);
  attach_labels(subset, label_map, true);
  if (subset.size() == 0) throw InputError("report: no labeled compounds");
  Dataset view{ds.graph, ds.modules, subset, {}};
  const auto features = load_features(cfg, view, AlphaGrid(ck.alphas), ck.rwr);
  const auto ctx = GraphContext::build(ds.graph, modules);

  std::vector<Tensor> z(subset.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(subset.size()); ++k) {
    try {
      const auto i = static_cast<std::size_t>(k);
      z[i] = predict(ck.params, features[i].matrix, ctx, ck.model).z;
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  const auto& y = *subset.labels;
  std::vector<PathwayRow> out;
  for (auto m : selected) {
    double sum[2] = {0.0, 0.0};
    std::size_t count[2] = {0, 0};
    for (std::size_t i = 0; i < z.size(); ++i) {
      sum[y[i]] += std::abs(z[i][m]);
      ++count[y[i]];
    }
    PathwayRow row;
    row.pathway = modules.names[m];
    row.mean_abs_positive = count[1] ? sum[1] / static_cast<double>(count[1]) : std::nan("");
    row.mean_abs_negative = count[0] ? sum[0] / static_cast<double>(count[0]) : std::nan("");
    row.difference = row.mean_abs_positive - row.mean_abs_negative;
    out.push_back(row);
  }
  return out;
}

std::string format_report(const std::vector<PathwayRow>& rows) {
  std::string s = "pathway\tmean_abs_z_positive\tmean_abs_z_negative\tdifference\n";
  for (const auto& r : rows)
    s += r.pathway + "\t" + num17(r.mean_abs_positive) + "\t" + num17(r.mean_abs_negative) + "\t" +
         num17(r.difference) + "\n";
  return s;
}

void cmd_synth(const testkit::SynthSpec& spec, const fs::path& out) {
  if (out.empty()) throw InputError("synth needs an output directory (--out)");
  const auto ds = testkit::generate(spec);
  fs::create_directories(out);
  write_file_atomic(out / "edges.tsv", format_edge_tsv(ds.graph));
  write_file_atomic(out / "compounds.tsv", format_compound_tsv(ds.compounds, ds.graph));
  write_file_atomic(out / "labels.tsv", format_label_tsv(ds.compounds));
  write_file_atomic(out / "modules.gmt", format_gmt(ds.modules, ds.graph));
}

}  // namespace gaa
