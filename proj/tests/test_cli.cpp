#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "urban/config.hpp"

using namespace urban;
namespace fs = std::filesystem;

namespace {

const std::string kCli = URBAN_CLI_PATH;

int run_cli(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "urban_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// One tiny benchmark shared by the pipeline tests.
const char* kGenerateArgs =
    "generate --seed 5 --set mode=full grid_rows=5 grid_cols=5 num_types=3 num_rated=2 "
    "num_weeks=60 num_features=3 theta_mean=0.4,0.3,-0.2,0 pattern_fraction=0.6 "
    "rating_week_prob=0.15";

// The 60-week fixture spans 14 months; use a 12/9 split.
const char* kSplitArgs = " window_months=12 train_months=9 validation_months=2";

std::string data_args(const fs::path& data) {
  return " --set panel=" + (data / "panel.csv").string() +
         " panel_header=" + (data / "panel.json").string() +
         " demographics=" + (data / "demographics.csv").string() +
         " edges=" + (data / "edges.csv").string();
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("unknown subcommand exits nonzero") {
  CHECK(run_cli("frobnicate") != 0);
  CHECK(run_cli("") != 0);
}

TEST_CASE("missing required config keys exit nonzero") {
  const fs::path out = fresh_dir("missing_keys");
  CHECK(run_cli("train --out " + out.string()) != 0);
}

TEST_CASE("generate, train, evaluate round trip with required keys") {
  const fs::path data = fresh_dir("pipeline_data");
  REQUIRE(run_cli(std::string(kGenerateArgs) + " --out " + data.string()) == 0);
  CHECK(fs::exists(data / "panel.csv"));
  CHECK(fs::exists(data / "panel.json"));
  CHECK(fs::exists(data / "truth.json"));
  CHECK(fs::exists(data / "generate_meta.json"));

  const fs::path run = fresh_dir("pipeline_run");
  const std::string common = data_args(data);
  REQUIRE(run_cli("train --seed 5 --variant full --out " + run.string() + common +
                  " epochs=8 batch_size=2048 hidden=12 emb_dim=6 validation=none" + kSplitArgs) == 0);
  CHECK(fs::exists(run / "checkpoint.bin"));
  CHECK(fs::exists(run / "history.jsonl"));
  CHECK(fs::exists(run / "config_used.cfg"));

  const fs::path eval = fresh_dir("pipeline_eval");
  REQUIRE(run_cli("evaluate --seed 5 --variant full --out " + eval.string() + common +
                  " checkpoint=" + (run / "checkpoint.bin").string() +
                  " truth=" + (data / "truth.json").string() + kSplitArgs) == 0);
  const std::string metrics = slurp(eval / "metrics.json");
  for (const char* key :
       {"mean_rating_correlation", "mean_report_correlation", "topk_coverage", "ece",
        "coefficient_recovery", "config_hash", "seed", "rating_metrics"})
    CHECK(metrics.find(key) != std::string::npos);
  CHECK(fs::exists(eval / "metrics.csv"));

  SUBCASE("evaluation is byte-identical on rerun") {
    const fs::path again = fresh_dir("pipeline_eval_again");
    REQUIRE(run_cli("evaluate --seed 5 --variant full --out " + again.string() + common +
                    " checkpoint=" + (run / "checkpoint.bin").string() +
                    " truth=" + (data / "truth.json").string() + kSplitArgs) == 0);
    CHECK(slurp(again / "metrics.json") == metrics);
  }

  SUBCASE("cluster emits label files") {
    const fs::path cl = fresh_dir("pipeline_cluster");
    REQUIRE(run_cli("cluster --seed 5 --out " + cl.string() + common +
                    " checkpoint=" + (run / "checkpoint.bin").string() +
                    " node_clusters=3 type_clusters=2" + kSplitArgs) == 0);
    CHECK(fs::exists(cl / "node_labels.csv"));
    CHECK(fs::exists(cl / "type_labels.csv"));
    CHECK(fs::exists(cl / "node_cluster_demographics.csv"));
    CHECK(fs::exists(cl / "cluster_summary.json"));
  }

  SUBCASE("report emits summary tables") {
    const fs::path rp = fresh_dir("pipeline_report");
    REQUIRE(run_cli("report --out " + rp.string() +
                    " --set metrics=" + (eval / "metrics.json").string() +
                    " checkpoint=" + (run / "checkpoint.bin").string() +
                    " truth=" + (data / "truth.json").string()) == 0);
    CHECK(fs::exists(rp / "summary.csv"));
    CHECK(fs::exists(rp / "per_type_correlation.csv"));
    CHECK(fs::exists(rp / "coefficient_scatter.csv"));
  }

  SUBCASE("external predictions evaluate without a checkpoint") {
    // Pluggable-baseline path: hand the evaluator a predictions file.
    const fs::path ext = fresh_dir("pipeline_external");
    const fs::path preds = ext / "predictions.csv";
    {
      std::ofstream out(preds);
      out << "node,type,pred_rating,pred_report\n";
      for (int i = 0; i < 25; ++i)
        for (int k = 0; k < 3; ++k)
          out << i << "," << k << "," << (0.01 * i - 0.1 * k) << "," << 0.25 << "\n";
    }
    REQUIRE(run_cli("evaluate --seed 5 --out " + ext.string() + common +
                    " predictions=" + preds.string() +
                    " truth=" + (data / "truth.json").string() + kSplitArgs) == 0);
    CHECK(fs::exists(ext / "metrics.json"));
  }
}

TEST_CASE("training histories are reproducible through the cli") {
  const fs::path data = fresh_dir("det_data");
  REQUIRE(run_cli(std::string(kGenerateArgs) + " --out " + data.string()) == 0);
  const fs::path a = fresh_dir("det_a");
  const fs::path b = fresh_dir("det_b");
  const std::string train_args = std::string(" epochs=4 batch_size=2048 hidden=10 emb_dim=5") + kSplitArgs;
  REQUIRE(run_cli("train --seed 9 --out " + a.string() + data_args(data) + train_args) == 0);
  REQUIRE(run_cli("train --seed 9 --out " + b.string() + data_args(data) + train_args) == 0);
  CHECK(slurp(a / "history.jsonl") == slurp(b / "history.jsonl"));
  CHECK(slurp(a / "checkpoint.bin") == slurp(b / "checkpoint.bin"));
}

TEST_CASE("sweep: singleton grid matches a direct run; grids enumerate") {
  const fs::path data = fresh_dir("sweep_data");
  REQUIRE(run_cli(std::string(kGenerateArgs) + " --out " + data.string()) == 0);
  const fs::path sweep = fresh_dir("sweep_out");
  REQUIRE(run_cli("sweep --seed 3 --out " + sweep.string() + data_args(data) +
                  " epochs=3 batch_size=4096 hidden=8 emb_dim=5 validation=best "
                  "gamma1=10,20 learning_rate=0.01,0.02" + kSplitArgs) == 0);
  const std::string board = slurp(sweep / "leaderboard.csv");
  // Header + 4 grid points.
  CHECK(std::count(board.begin(), board.end(), '\n') == 5);
  CHECK(fs::exists(sweep / "run_0" / "checkpoint.bin"));
  CHECK(fs::exists(sweep / "run_3" / "checkpoint.bin"));

  const fs::path single = fresh_dir("sweep_single");
  REQUIRE(run_cli("sweep --seed 3 --out " + single.string() + data_args(data) +
                  " epochs=3 batch_size=4096 hidden=8 emb_dim=5 validation=best" + kSplitArgs) == 0);
  const std::string single_board = slurp(single / "leaderboard.csv");
  CHECK(std::count(single_board.begin(), single_board.end(), '\n') == 2);
  // The singleton sweep's checkpoint equals a direct train run with the same
  // effective config.
  const fs::path direct = fresh_dir("sweep_direct");
  REQUIRE(run_cli("train --seed 3 --out " + direct.string() + data_args(data) +
                  " epochs=3 batch_size=4096 hidden=8 emb_dim=5 validation=best" + kSplitArgs) == 0);
  CHECK(slurp(single / "run_0" / "checkpoint.bin") == slurp(direct / "checkpoint.bin"));
}

TEST_SUITE_END();
