#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "gaa/checkpoint.hpp"
#include "gaa/errors.hpp"
#include "gaa/pipeline.hpp"
#include "support.hpp"

using namespace gaa;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

testkit::SynthSpec small_spec(std::uint64_t seed) {
  testkit::SynthSpec s;
  s.n_compounds = 120;
  s.seed = seed;
  return s;
}

class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new gaa::test::TempDir("pipeline");
    cmd_synth(small_spec(5), data());
    cfg_ = new RunConfig(base_config());
    cfg_->out = dir_->path() / "gaa";
    cfg_->train.max_epochs = 3;
    cfg_->train.batch_size = 16;
    gaa_ = new TrainSummary(cmd_train(*cfg_));
    RunConfig b = *cfg_;
    b.kind = ModelKind::baseline;
    b.out = dir_->path() / "baseline";
    baseline_ = new TrainSummary(cmd_train(b));
  }
  static void TearDownTestSuite() {
    delete baseline_;
    delete gaa_;
    delete cfg_;
    delete dir_;
  }

  static fs::path data() { return dir_->path() / "data"; }
  static RunConfig base_config() {
    RunConfig c;
    c.edges = data() / "edges.tsv";
    c.features = data() / "compounds.tsv";
    c.labels = data() / "labels.tsv";
    c.gmt = data() / "modules.gmt";
    return c;
  }

  static gaa::test::TempDir* dir_;
  static RunConfig* cfg_;
  static TrainSummary* gaa_;
  static TrainSummary* baseline_;
};

gaa::test::TempDir* Pipeline::dir_ = nullptr;
RunConfig* Pipeline::cfg_ = nullptr;
TrainSummary* Pipeline::gaa_ = nullptr;
TrainSummary* Pipeline::baseline_ = nullptr;

}  // namespace

TEST_F(Pipeline, TrainWritesOutputs) {
  EXPECT_TRUE(fs::exists(gaa_->checkpoint_path));
  EXPECT_TRUE(fs::exists(gaa_->config_path));
  const auto log = slurp(gaa_->log_path);
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 3);
  EXPECT_EQ(gaa_->log.size(), 3u);
  EXPECT_EQ(baseline_->log.size(), 1u);
  const auto cfg_json = nlohmann::json::parse(slurp(gaa_->config_path));
  EXPECT_EQ(cfg_json.at("alphas").get<std::string>(), "0.1:0.9:0.1");
}

TEST_F(Pipeline, CheckpointRoundTrip) {
  const auto ds = load_dataset(*cfg_, true);
  const std::string text = slurp(gaa_->checkpoint_path);
  const auto ck = parse_checkpoint(text, ds.graph.n_nodes(), ds.modules->n_modules());
  EXPECT_EQ(serialize_checkpoint(ck), text);
  EXPECT_EQ(ck.alphas.size(), 9u);
  const auto bk = load_checkpoint(baseline_->checkpoint_path, ds.graph.n_nodes(), ds.modules->n_modules());
  EXPECT_EQ(bk.kind, ModelKind::baseline);
  EXPECT_EQ(bk.linear.w.size(), ds.graph.n_nodes());
}

TEST_F(Pipeline, CheckpointRejections) {
  const auto ds = load_dataset(*cfg_, true);
  const std::size_t n = ds.graph.n_nodes(), d = ds.modules->n_modules();
  const std::string text = slurp(gaa_->checkpoint_path);
  EXPECT_THROW(parse_checkpoint("not a checkpoint", n, d), InputError);
  std::string future = text;
  future.replace(future.find(" 1\n"), 3, " 9\n");
  EXPECT_THROW(parse_checkpoint(future, n, d), InputError);
  EXPECT_THROW(parse_checkpoint(text.substr(0, text.size() / 2), n, d), InputError);
  EXPECT_THROW(parse_checkpoint(text, n + 1, d), InputError);
  EXPECT_THROW(parse_checkpoint(text, n, d, "0000000000000000"), InputError);
}

TEST_F(Pipeline, PredictRanksByProbability) {
  const auto recs = cmd_predict(*cfg_, gaa_->checkpoint_path, 0.5);
  ASSERT_EQ(recs.size(), 120u);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(recs[i].rank, i + 1);
    EXPECT_EQ(recs[i].flagged, recs[i].probability >= 0.5);
    if (i > 0) {
      EXPECT_GE(recs[i - 1].probability, recs[i].probability);
      if (recs[i - 1].probability == recs[i].probability) EXPECT_LT(recs[i - 1].compound_id, recs[i].compound_id);
    }
  }
  const auto all = cmd_predict(*cfg_, gaa_->checkpoint_path, 0.0);
  EXPECT_TRUE(std::all_of(all.begin(), all.end(), [](const PredictionRecord& r) { return r.flagged; }));
  EXPECT_THROW(cmd_predict(*cfg_, gaa_->checkpoint_path, 1.5), InputError);
  const auto tsv = format_predictions(recs);
  EXPECT_EQ(tsv.substr(0, tsv.find('\n')), "rank\tcompound_id\tprobability\tflagged");
  EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 121);
}

TEST_F(Pipeline, PredictBaselineTiesByCompoundId) {
  const auto recs = cmd_predict(*cfg_, baseline_->checkpoint_path, 0.5);
  ASSERT_EQ(recs.size(), 120u);
  for (std::size_t i = 1; i < recs.size(); ++i) EXPECT_GE(recs[i - 1].probability, recs[i].probability);
}

TEST_F(Pipeline, EvaluateUsesTheStoredSplit) {
  const auto ds = load_dataset(*cfg_, true);
  const auto split = stratified_split(*ds.compounds.labels, cfg_->split);
  EXPECT_EQ(cmd_evaluate(*cfg_, gaa_->checkpoint_path, EvalSubset::test).n, split.test.size());
  EXPECT_EQ(cmd_evaluate(*cfg_, gaa_->checkpoint_path, EvalSubset::all).n, 120u);
  EXPECT_EQ(cmd_evaluate(*cfg_, baseline_->checkpoint_path, EvalSubset::val).n, split.val.size());
  EXPECT_EQ(parse_eval_subset("train"), EvalSubset::train);
  EXPECT_THROW(parse_eval_subset("holdout"), InputError);
}

TEST_F(Pipeline, ReportCoversPathways) {
  const auto rows = cmd_report(*cfg_, gaa_->checkpoint_path, {});
  ASSERT_EQ(rows.size(), 10u);
  for (const auto& r : rows) {
    EXPECT_GE(r.mean_abs_positive, 0.0);
    EXPECT_DOUBLE_EQ(r.difference, r.mean_abs_positive - r.mean_abs_negative);
  }
  const auto one = cmd_report(*cfg_, gaa_->checkpoint_path, {rows[3].pathway});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].mean_abs_positive, rows[3].mean_abs_positive);
  EXPECT_THROW(cmd_report(*cfg_, gaa_->checkpoint_path, {"NOPE"}), InputError);
  EXPECT_THROW(cmd_report(*cfg_, baseline_->checkpoint_path, {}), InputError);
  const auto tsv = format_report(rows);
  EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 11);
}

TEST_F(Pipeline, CheckpointFromAnotherGraphIsRejected) {
  const auto other = dir_->path() / "other";
  cmd_synth(small_spec(99), other);
  RunConfig c = base_config();
  c.edges = other / "edges.tsv";
  c.features = other / "compounds.tsv";
  c.gmt = other / "modules.gmt";
  EXPECT_THROW(cmd_predict(c, gaa_->checkpoint_path, 0.5), InputError);
}

TEST_F(Pipeline, MissingInputsAreInputErrors) {
  RunConfig c = base_config();
  c.edges = dir_->path() / "absent.tsv";
  EXPECT_THROW(cmd_predict(c, gaa_->checkpoint_path, 0.5), InputError);
  EXPECT_THROW(cmd_predict(*cfg_, dir_->path() / "absent.gaa", 0.5), InputError);
}

TEST_F(Pipeline, DiffuseFillsTheCache) {
  RunConfig c = base_config();
  c.out = dir_->path() / "cache";
  const auto first = cmd_diffuse(c);
  const auto second = cmd_diffuse(c);
  EXPECT_EQ(first.compounds, 120u);
  EXPECT_EQ(first.cache_hits, 0u);
  EXPECT_EQ(second.cache_hits, 120u);
}

// The command-line tool's exit codes.
class Cli : public Pipeline {
 protected:
  static int run(const std::string& args) {
    const std::string cmd = std::string("'") + GAA_CLI_PATH + "' " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  static std::string inputs() {
    return " --edges " + (data() / "edges.tsv").string() + " --features " + (data() / "compounds.tsv").string() +
           " --gmt " + (data() / "modules.gmt").string();
  }
};

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("predict" + inputs() + " --checkpoint " + gaa_->checkpoint_path.string()), 0);
  EXPECT_EQ(run("predict" + inputs() + " --checkpoint " + (dir_->path() / "absent.gaa").string()), 2);
  EXPECT_EQ(run("train --bogus-flag"), 2);
  EXPECT_EQ(run(""), 2);
  const auto no_gmt = inputs().substr(0, inputs().find(" --gmt"));
  EXPECT_EQ(run("diffuse" + no_gmt + " --out " + (dir_->path() / "c2").string() + " --rwr-max-iter 1 --tol 1e-15"), 3);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, PredictWritesFileAndConfigEcho) {
  const auto out = dir_->path() / "preds" / "p.tsv";
  ASSERT_EQ(run("predict" + inputs() + " --checkpoint " + gaa_->checkpoint_path.string() + " --out " + out.string() +
                " --threshold 0.7"),
            0);
  EXPECT_EQ(slurp(out), format_predictions(cmd_predict(*cfg_, gaa_->checkpoint_path, 0.7)));
  const auto echo = nlohmann::json::parse(slurp(out.string() + ".config.json"));
  EXPECT_EQ(echo.at("threshold").get<double>(), 0.7);
}
