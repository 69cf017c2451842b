#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "urban/demographics.hpp"
#include "urban/graph.hpp"
#include "urban/panel.hpp"
#include "urban/panel_io.hpp"

namespace urban {

/// Per-type reporting model: probability of a report is
/// sigmoid(alpha * rating + theta . x), with theta's last component acting on
/// the constant intercept column of the features.
struct ReportingCoefficients {
  double alpha = 0.0;
  Eigen::VectorXd theta;
};

/// Mean reporting coefficients fitted on observed ratings: one logistic
/// regression per rated type of report ~ [rating, features], averaged
/// elementwise across types. Types whose labels are single-class are skipped
/// with a warning. Returns [alpha, theta...] (length D+2).
Eigen::VectorXd fit_reference_coefficients(const ObservationPanel& panel,
                                           const Demographics& demographics,
                                           const WeekWindow& window);

/// Draws each type's demographic coefficients componentwise from
/// Gaussian(mean, sd), deterministically per (seed, type).
std::vector<Eigen::VectorXd> draw_type_coefficients(const Eigen::VectorXd& theta_mean,
                                                    double sd, uint64_t seed, int num_types);

struct TypeGeneration {
  ReportingCoefficients coefficients;  // calibrated; theta's intercept absorbs the shift
  std::vector<int> nodes;              // sparsity pattern
  Eigen::VectorXd ratings;             // aligned with nodes; zero mean, unit sd
};

/// Inverts the reporting model for one type: given per-node report
/// frequencies (clamped to [eps, 1-eps]) and drawn theta, produces ratings
/// with zero mean and unit sd plus the calibrated (alpha, theta) for which
/// sigmoid(alpha*r + theta.x) reproduces the clamped frequency exactly.
/// alpha is set to -sd so lower ratings mean more reports. Throws
/// "degenerate type" when the frequencies carry no variation.
TypeGeneration generate_type_ratings(const Eigen::VectorXd& frequencies,
                                     const std::vector<int>& nodes,
                                     const Eigen::MatrixXd& features,
                                     const Eigen::VectorXd& theta_drawn, double eps);

/// eps defaults to half the resolution of an empirical frequency estimate.
double default_frequency_clamp(int window_weeks);

struct GeneratorSpec {
  Eigen::VectorXd theta_mean;  // length D+1, intercept slot last
  double theta_sd = 0.1;
  double freq_clamp_eps = 0.0;  // 0 -> derived from the window length
  uint64_t seed = 0;
};

struct SemiSyntheticResult {
  ObservationPanel panel;
  GroundTruthSidecar truth;
};

/// Replaces the panel's observed rating values with ratings generated by
/// inverting the reporting model against each window's empirical report
/// frequencies. The real sparsity pattern and real report indicators are
/// kept; train and test windows are generated separately. Rating rows outside
/// both windows are dropped.
SemiSyntheticResult make_semi_synthetic_panel(const ObservationPanel& real_panel,
                                              const Demographics& demographics,
                                              const WeekWindow& train_weeks,
                                              const WeekWindow& test_weeks,
                                              const GeneratorSpec& spec);

/// Removes a uniform random subset of the rating observations of one type,
/// keeping round(fraction * count) rows. Other types are untouched. A
/// non-empty window restricts the subsampling to rows inside it (training
/// sparsity experiments keep their evaluation-window rows).
ObservationPanel subsample_ratings(const ObservationPanel& panel, int type, double fraction,
                                   uint64_t seed, const WeekWindow& window = {0, 0});

/// Self-contained benchmark: a grid graph, Gaussian demographics, ratings
/// built by inverting per-cell base frequencies, and reports drawn Bernoulli
/// from the reporting model so the fitted model is well-specified.
struct FullSyntheticSpec {
  int grid_rows = 10;
  int grid_cols = 10;
  int num_types = 8;
  int num_rated = 3;
  int num_weeks = 104;
  int num_features = 6;
  std::string start_date = "2022-01-03";
  Eigen::VectorXd theta_mean;   // empty -> default confounded profile
  double theta_sd = 0.1;
  double base_frequency_min = 0.05;
  double base_frequency_max = 0.35;
  double cell_logit_sd = 0.4;
  double pattern_fraction = 0.75;
  double rating_week_prob = 0.1;
  double freq_clamp_eps = 0.0;  // 0 -> derived from num_weeks
  uint64_t seed = 0;
};

struct FullSyntheticData {
  SpatialGraph graph;
  Demographics demographics;
  ObservationPanel panel;
  GroundTruthSidecar truth;
};

Eigen::VectorXd default_theta_mean(int num_features);

FullSyntheticData make_fully_synthetic(const FullSyntheticSpec& spec);

}  // namespace urban
