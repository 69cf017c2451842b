#pragma once

#include <string>

#include "urban/config.hpp"
#include "urban/demographics.hpp"
#include "urban/evaluation.hpp"
#include "urban/graph.hpp"
#include "urban/panel.hpp"
#include "urban/splits.hpp"
#include "urban/training.hpp"

namespace urban {

/// Orchestration behind the CLI subcommands. Every function writes its
/// artifacts under `out_dir` and returns 0 on success; failures raise.

int run_ingest(const Config& config, const std::string& out_dir);
int run_generate(const Config& config, const std::string& out_dir);
int run_train(const Config& config, const std::string& out_dir);
int run_evaluate(const Config& config, const std::string& out_dir);
int run_cluster(const Config& config, const std::string& out_dir);
int run_sweep(const Config& config, const std::string& out_dir);
int run_report(const Config& config, const std::string& out_dir);

/// Shared helpers, also used by tests.
struct LoadedInputs {
  ObservationPanel panel;
  Demographics demographics;
  SpatialGraph graph;
};
LoadedInputs load_inputs(const Config& config);

SplitSpec resolve_split(const Config& config, const ObservationPanel& panel);
VariantConfig resolve_variant(const Config& config);
TrainConfig resolve_train_config(const Config& config);

}  // namespace urban
