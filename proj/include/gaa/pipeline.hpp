#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaa/baseline.hpp"
#include "gaa/checkpoint.hpp"
#include "gaa/diffusion.hpp"
#include "gaa/graph.hpp"
#include "gaa/io.hpp"
#include "gaa/metrics.hpp"
#include "gaa/model.hpp"
#include "gaa/testkit.hpp"
#include "gaa/training.hpp"

// The command-line pipeline as plain functions over a resolved RunConfig.
namespace gaa {

struct RunConfig {
  std::filesystem::path edges;
  std::filesystem::path features;
  std::filesystem::path labels;
  std::filesystem::path gmt;
  std::filesystem::path cache_dir;  // empty: no feature cache
  std::filesystem::path out;

  std::string alphas = "0.1:0.9:0.1";
  RwrOptions rwr;

  ModelKind kind = ModelKind::gaa;
  ModelConfig model;
  TrainConfig train;
  SplitSpec split;
  double baseline_alpha = kBaselineDefaultAlpha;
  LogisticOptions logistic;

  std::uint64_t seed = 0;  // model init and shuffling; the split has its own seed
  double threshold = 0.5;

  // Paths present for this command must exist; numeric settings must validate.
  void check_paths(std::initializer_list<const std::filesystem::path*> required) const;
};

nlohmann::ordered_json to_json(const RunConfig& cfg);

struct Dataset {
  SharedGraph graph;
  std::optional<SupermoduleMap> modules;
  CompoundSet compounds;
  CompoundParseStats stats;
};

// Reads edges and compounds, plus the GMT and labels when their paths are set.
Dataset load_dataset(const RunConfig& cfg, bool require_labels);

struct DiffuseSummary {
  std::size_t compounds = 0;
  std::size_t cache_hits = 0;
  std::size_t dropped_targets = 0;
  std::string graph_hash;
  std::string grid;
};

DiffuseSummary cmd_diffuse(const RunConfig& cfg);

struct TrainSummary {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
  bool diverged = false;
  std::filesystem::path checkpoint_path;
  std::filesystem::path log_path;
  std::filesystem::path config_path;
};

// Writes checkpoint.gaa, train_log.jsonl and run_config.json into cfg.out.
TrainSummary cmd_train(const RunConfig& cfg);

enum class EvalSubset { train, val, test, all };
EvalSubset parse_eval_subset(std::string_view s);
std::string to_string(EvalSubset s);

// Scores the checkpoint's own split of the labeled compounds.
EvalReport cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& checkpoint, EvalSubset subset);
nlohmann::ordered_json to_json(const EvalReport& r);

struct PredictionRecord {
  std::string compound_id;
  double probability = 0.0;
  std::size_t rank = 0;  // 1-based
  bool flagged = false;
};

// Ranked by descending probability, ties by ascending compound id.
std::vector<PredictionRecord> cmd_predict(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                                          double threshold);
std::string format_predictions(const std::vector<PredictionRecord>& records);

struct PathwayRow {
  std::string pathway;
  double mean_abs_positive = 0.0;
  double mean_abs_negative = 0.0;
  double difference = 0.0;  // positive minus negative
};

// Mean |z| per pathway over positive and negative labeled compounds. An empty
// `pathways` selects every pathway.
std::vector<PathwayRow> cmd_report(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                                   const std::vector<std::string>& pathways);
std::string format_report(const std::vector<PathwayRow>& rows);

// Writes edges.tsv, compounds.tsv, labels.tsv and modules.gmt into `out`.
void cmd_synth(const testkit::SynthSpec& spec, const std::filesystem::path& out);

}  // namespace gaa
