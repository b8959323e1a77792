#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gaa/errors.hpp"
#include "gaa/io.hpp"
#include "gaa/pipeline.hpp"

namespace fs = std::filesystem;
using namespace gaa;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct Cli {
  RunConfig cfg;
  std::string model_kind = "gaa";
  std::string pool = "mean";
  std::string class_weights = "inverse_frequency";
  std::string subset = "test";
  fs::path checkpoint;
  fs::path out_file;
  double predict_threshold = 0.9;
  std::string pathways;
  testkit::SynthSpec synth;
};

void add_inputs(CLI::App* sub, Cli& c, bool labels, bool gmt) {
  sub->add_option("--edges", c.cfg.edges, "Interaction network, TSV id_a<TAB>id_b");
  sub->add_option("--features", c.cfg.features, "Compound targets, TSV compound_id<TAB>node_id");
  if (labels) sub->add_option("--labels", c.cfg.labels, "Labels, TSV compound_id<TAB>{0|1}");
  if (gmt) sub->add_option("--gmt", c.cfg.gmt, "Supermodules (pathways) in GMT format");
  sub->add_option("--cache-dir", c.cfg.cache_dir, "Feature cache directory");
  sub->add_option("--tol", c.cfg.rwr.tol, "RWR convergence tolerance (infinity norm)")->capture_default_str();
  sub->add_option("--rwr-max-iter", c.cfg.rwr.max_iter, "RWR iteration cap")->capture_default_str();
}

void add_training(CLI::App* sub, Cli& c) {
  auto& m = c.cfg.model;
  auto& t = c.cfg.train;
  sub->add_option("--model", c.model_kind, "gaa or baseline")
      ->check(CLI::IsMember({"gaa", "baseline"}))
      ->capture_default_str();
  sub->add_option("--alphas", c.cfg.alphas, "Restart grid, a:b:step or comma list")->capture_default_str();
  sub->add_option("--heads", m.heads, "Attention heads, first layer")->capture_default_str();
  sub->add_option("--head-width", m.head_width, "Width per head, first layer")->capture_default_str();
  sub->add_option("--gat2-width", m.gat2_width, "Second layer width")->capture_default_str();
  sub->add_option("--decoder-width", m.decoder_width, "Decoder attention width")->capture_default_str();
  sub->add_option("--mlp-hidden", m.mlp_hidden, "Classifier hidden width")->capture_default_str();
  sub->add_option("--pool", c.pool, "Supermodule aggregator")
      ->check(CLI::IsMember({"mean", "sum", "max"}))
      ->capture_default_str();
  sub->add_option("--lr", t.adam.lr, "Adam learning rate")->capture_default_str();
  sub->add_option("--epochs", t.max_epochs, "Maximum epochs")->capture_default_str();
  sub->add_option("--patience", t.patience, "Early-stopping patience in epochs")->capture_default_str();
  sub->add_option("--gamma", t.gamma, "Reconstruction weight in [0, 1]")->capture_default_str();
  sub->add_option("--batch-size", t.batch_size, "Compounds per update, 0 = full batch")->capture_default_str();
  sub->add_option("--class-weights", c.class_weights, "inverse_frequency or none")
      ->check(CLI::IsMember({"inverse_frequency", "none"}))
      ->capture_default_str();
  sub->add_option("--seed", c.cfg.seed, "Initialization and shuffling seed")->capture_default_str();
  sub->add_option("--split-seed", c.cfg.split.seed, "Train/val/test split seed")->capture_default_str();
  sub->add_option("--train-frac", c.cfg.split.train)->capture_default_str();
  sub->add_option("--val-frac", c.cfg.split.val)->capture_default_str();
  sub->add_option("--test-frac", c.cfg.split.test)->capture_default_str();
  sub->add_flag("--deterministic", t.deterministic, "Reduce per-compound gradients in a fixed order");
  sub->add_option("--baseline-alpha", c.cfg.baseline_alpha, "Restart probability for the baseline")
      ->capture_default_str();
  sub->add_option("--l2", c.cfg.logistic.l2, "Baseline L2 penalty")->capture_default_str();
}

void finalize(Cli& c) {
  c.cfg.kind = c.model_kind == "baseline" ? ModelKind::baseline : ModelKind::gaa;
  c.cfg.model.pool = parse_aggregator(c.pool);
  c.cfg.train.class_weight_mode =
      c.class_weights == "none" ? ClassWeightMode::none : ClassWeightMode::inverse_frequency;
  c.cfg.model.validate();
}

// Resolved settings beside an output file, e.g. preds.tsv -> preds.tsv.config.json.
void echo_config(const fs::path& output, const RunConfig& cfg, nlohmann::ordered_json extra) {
  auto j = to_json(cfg);
  for (auto& [k, v] : extra.items()) j[k] = v;
  const fs::path dest = fs::is_directory(output) ? output / "run_config.json" : fs::path(output.string() + ".config.json");
  write_file_atomic(dest, j.dump(2) + "\n");
}

void emit(const fs::path& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
  } else {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_file_atomic(out, text);
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Graph attentional autoencoder for compound classification over a shared protein network"};
  app.set_config("--config", "", "TOML config file; command-line flags take precedence");
  app.require_subcommand(1);
  Cli c;
  c.cfg.train.deterministic = false;

  auto* diffuse = app.add_subcommand("diffuse", "Precompute multi-alpha RWR features into a cache");
  add_inputs(diffuse, c, false, false);
  diffuse->add_option("--alphas", c.cfg.alphas, "Restart grid, a:b:step or comma list")->capture_default_str();
  diffuse->add_option("--out", c.cfg.out, "Cache directory")->required();

  auto* train = app.add_subcommand("train", "Train GAA or the baseline; writes checkpoint, log and config");
  add_inputs(train, c, true, true);
  add_training(train, c);
  train->add_option("--out", c.cfg.out, "Output directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on its split");
  add_inputs(evaluate, c, true, true);
  evaluate->add_option("--checkpoint", c.checkpoint)->required();
  evaluate->add_option("--subset", c.subset, "train, val, test or all")->capture_default_str();
  evaluate->add_option("--threshold", c.cfg.threshold, "Decision threshold on p(positive)")->capture_default_str();
  evaluate->add_option("--out", c.out_file, "Write the report JSON here");

  auto* predict = app.add_subcommand("predict", "Rank compounds by predicted probability");
  add_inputs(predict, c, false, true);
  predict->add_option("--checkpoint", c.checkpoint)->required();
  predict->add_option("--threshold", c.predict_threshold, "Flag compounds with p >= threshold")
      ->capture_default_str();
  predict->add_option("--out", c.out_file, "Ranked TSV (stdout when omitted)");

  auto* report = app.add_subcommand("report", "Per-pathway embedding magnitudes by class");
  add_inputs(report, c, true, true);
  report->add_option("--checkpoint", c.checkpoint)->required();
  report->add_option("--pathways", c.pathways, "Comma-separated pathway names (default: all)");
  report->add_option("--out", c.out_file, "TSV (stdout when omitted)");

  auto* synth = app.add_subcommand("synth", "Write a synthetic planted-signal dataset");
  auto& s = c.synth;
  synth->add_option("--out", c.cfg.out, "Output directory")->required();
  synth->add_option("--seed", s.seed)->capture_default_str();
  synth->add_option("--nodes", s.n_nodes)->capture_default_str();
  synth->add_option("--lattice-degree", s.lattice_degree)->capture_default_str();
  synth->add_option("--rewire", s.rewire_prob)->capture_default_str();
  synth->add_option("--modules", s.n_modules)->capture_default_str();
  synth->add_option("--module-min", s.module_size_min)->capture_default_str();
  synth->add_option("--module-max", s.module_size_max)->capture_default_str();
  synth->add_option("--compounds", s.n_compounds)->capture_default_str();
  synth->add_option("--target-density", s.target_density)->capture_default_str();
  synth->add_option("--positive-ratio", s.positive_ratio)->capture_default_str();
  synth->add_option("--signal-alpha", s.signal_alpha)->capture_default_str();
  synth->add_option("--noise", s.noise_rate)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }
  finalize(c);
  const auto& cfg = c.cfg;

  if (diffuse->parsed()) {
    const auto sum = cmd_diffuse(cfg);
    echo_config(cfg.out, cfg, {{"command", "diffuse"}});
    nlohmann::ordered_json j{{"compounds", sum.compounds},   {"cache_hits", sum.cache_hits},
                             {"computed", sum.compounds - sum.cache_hits}, {"dropped_targets", sum.dropped_targets},
                             {"graph_hash", sum.graph_hash}, {"grid", sum.grid}};
    std::cout << j.dump() << "\n";
  } else if (train->parsed()) {
    const auto sum = cmd_train(cfg);
    const auto& ck = sum.checkpoint;
    nlohmann::ordered_json j{{"model", c.model_kind},
                             {"epochs", sum.log.size()},
                             {"best_epoch", ck.best_epoch},
                             {"checkpoint", sum.checkpoint_path.string()},
                             {"log", sum.log_path.string()}};
    std::cout << j.dump() << "\n";
  } else if (evaluate->parsed()) {
    const auto r = cmd_evaluate(cfg, c.checkpoint, parse_eval_subset(c.subset));
    std::cout << table_header() << "\n" << table_row(c.subset, r) << "\n";
    auto j = to_json(r);
    j["subset"] = c.subset;
    if (c.out_file.empty()) {
      std::cout << j.dump() << "\n";
    } else {
      emit(c.out_file, j.dump(2) + "\n");
      echo_config(c.out_file, cfg, {{"command", "evaluate"}, {"checkpoint", c.checkpoint.string()}});
    }
  } else if (predict->parsed()) {
    const auto records = cmd_predict(cfg, c.checkpoint, c.predict_threshold);
    emit(c.out_file, format_predictions(records));
    if (!c.out_file.empty())
      echo_config(c.out_file, cfg,
                  {{"command", "predict"}, {"checkpoint", c.checkpoint.string()}, {"threshold", c.predict_threshold}});
  } else if (report->parsed()) {
    const auto rows = cmd_report(cfg, c.checkpoint, split_list(c.pathways));
    emit(c.out_file, format_report(rows));
    if (!c.out_file.empty())
      echo_config(c.out_file, cfg, {{"command", "report"}, {"checkpoint", c.checkpoint.string()}});
  } else if (synth->parsed()) {
    cmd_synth(s, cfg.out);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  } catch (const InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
