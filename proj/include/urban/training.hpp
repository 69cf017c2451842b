#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "urban/demographics.hpp"
#include "urban/graph.hpp"
#include "urban/model.hpp"
#include "urban/objective.hpp"
#include "urban/panel.hpp"
#include "urban/splits.hpp"

namespace urban {

struct TrainConfig {
  double learning_rate = 0.01;
  int batch_size = 16000;
  int epochs = 200;
  uint64_t seed = 0;
  std::string variant = "full";
  int subsampled_type = -1;          // type under subsampling, for the extra penalties
  std::string validation = "none";   // "none" keeps the final epoch; "best" keeps the
                                     // epoch with the best validation score
  int hidden = 0;                    // 0 -> number of nodes
  int emb_dim = 50;
  std::string component_log;         // optional JSONL path for per-step loss components
};

/// Training rows split into the two pools that are never mixed in a batch.
struct TrainingRows {
  BatchRows observed;
  BatchRows unobserved;
};

/// Rows inside the week window. Observed rows are the panel's rating
/// observations; unobserved rows are every remaining (node, type, week) cell.
/// With `ignore_ratings` every cell lands in the unobserved pool (the
/// reports-only regime, which never reads rating data).
TrainingRows extract_training_rows(const ObservationPanel& panel, const WeekWindow& window,
                                   bool ignore_ratings = false);

/// Deterministic shuffled batches, partitioned by observedness, re-shuffled
/// per epoch. Batch sizes are `batch_size` with one trailing remainder per
/// pool; batch order interleaves the two pools randomly.
std::vector<BatchRows> build_batches(const TrainingRows& rows, int batch_size, uint64_t seed,
                                     uint64_t epoch = 0);
std::vector<BatchRows> build_batches(const ObservationPanel& panel, const WeekWindow& window,
                                     int batch_size, uint64_t seed, uint64_t epoch = 0);

struct ModelGrads {
  NodeEmbedder::Grads embedder;
  Eigen::MatrixXd type_table;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd theta;
};

struct StepResult {
  LossComponents components;
  double total = 0.0;
};

/// Loss (and optionally gradients) of the variant-weighted objective on one
/// batch. Gradients are raw; freeze/downweight policies are applied by the
/// optimizer loop, not here.
StepResult compute_step(UrbanModel& model, const Eigen::SparseMatrix<double>& ahat,
                        const Eigen::MatrixXd& features, const BatchRows& batch,
                        const VariantConfig& variant, int subsampled_type,
                        ForwardMode mode, bool update_running_stats, ModelGrads* grads);

/// Per-type multiplier on reporting-head gradients coming from an
/// unobserved-rating batch (1 everywhere for observed batches).
double head_gradient_scale(const VariantConfig& variant, bool batch_observed, int type,
                           int subsampled_type);

struct EpochStats {
  int epoch = 0;
  LossComponents components;  // summed over the epoch's batches
  double total = 0.0;
  double validation_score = std::numeric_limits<double>::quiet_NaN();
};

struct TrainedModel {
  UrbanModel model;
  VariantConfig variant;
  std::vector<EpochStats> history;
  int selected_epoch = -1;
};

TrainedModel train(const ObservationPanel& panel, const Demographics& demographics,
                   const SpatialGraph& graph, const SplitSpec& split,
                   const VariantConfig& variant, const TrainConfig& config);

/// Flat parameter vector in a fixed tensor order, for finite differencing.
Eigen::VectorXd pack_parameters(const UrbanModel& model);
void unpack_parameters(UrbanModel& model, const Eigen::VectorXd& packed);
Eigen::VectorXd pack_gradients(const ModelGrads& grads);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  Eigen::VectorXd analytic;
  Eigen::VectorXd numeric;
};

/// Central finite differences of the batch objective against the analytic
/// gradients, over every parameter group.
GradientCheckResult gradient_check(UrbanModel model, const Eigen::SparseMatrix<double>& ahat,
                                   const Eigen::MatrixXd& features, const BatchRows& batch,
                                   const VariantConfig& variant, int subsampled_type = -1,
                                   double eps = 1e-5);

double max_relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric);

}  // namespace urban
