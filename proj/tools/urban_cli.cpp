#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "urban/config.hpp"
#include "urban/pipeline.hpp"

namespace {

// Shared flags; anything else flows through --set key=value overrides.
struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
  long long seed = -1;
  std::string variant;
  int split = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "key=value config file");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "experiment seed (overrides config)");
  cmd->add_option("--variant", args.variant, "training variant name");
  cmd->add_option("--split", args.split, "time-split index");
  cmd->add_option("--set", args.overrides, "extra key=value overrides")->take_all();
}

urban::Config resolve(const CommonArgs& args) {
  urban::Config config;
  if (!args.config_path.empty()) config = urban::Config::from_file(args.config_path);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--set expects key=value, got '" + kv + "'");
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.seed >= 0) config.set("seed", std::to_string(args.seed));
  if (!args.variant.empty()) config.set("variant", args.variant);
  if (args.split >= 0) config.set("split", std::to_string(args.split));
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-state estimation for urban incidents from inspection "
               "ratings and crowdsourced reports"};
  app.require_subcommand(1);

  CommonArgs ingest_args, generate_args, train_args, evaluate_args, cluster_args, sweep_args,
      report_args;
  add_common(app.add_subcommand("ingest", "build a panel from raw report/inspection exports"),
             ingest_args);
  add_common(app.add_subcommand("generate", "emit a synthetic or semi-synthetic panel"),
             generate_args);
  add_common(app.add_subcommand("train", "fit a model on a panel"), train_args);
  add_common(app.add_subcommand("evaluate", "metric battery for a trained model"),
             evaluate_args);
  add_common(app.add_subcommand("cluster", "cluster nodes/types by predicted ratings"),
             cluster_args);
  add_common(app.add_subcommand("sweep", "grid search over list-valued config keys"),
             sweep_args);
  add_common(app.add_subcommand("report", "summary tables and plot data from metrics"),
             report_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (app.got_subcommand("ingest"))
      return urban::run_ingest(resolve(ingest_args), ingest_args.out_dir);
    if (app.got_subcommand("generate"))
      return urban::run_generate(resolve(generate_args), generate_args.out_dir);
    if (app.got_subcommand("train"))
      return urban::run_train(resolve(train_args), train_args.out_dir);
    if (app.got_subcommand("evaluate"))
      return urban::run_evaluate(resolve(evaluate_args), evaluate_args.out_dir);
    if (app.got_subcommand("cluster"))
      return urban::run_cluster(resolve(cluster_args), cluster_args.out_dir);
    if (app.got_subcommand("sweep"))
      return urban::run_sweep(resolve(sweep_args), sweep_args.out_dir);
    if (app.got_subcommand("report"))
      return urban::run_report(resolve(report_args), report_args.out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
