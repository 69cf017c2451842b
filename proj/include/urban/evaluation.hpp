#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "urban/demographics.hpp"
#include "urban/panel.hpp"
#include "urban/panel_io.hpp"
#include "urban/stats.hpp"
#include "urban/synthetic.hpp"

namespace urban {

/// Pearson correlation between predictions and per-pair truth.
CorrelationResult pair_correlation(std::span<const double> pred, std::span<const double> truth);

double pair_rmse(std::span<const double> pred, std::span<const double> truth);

/// Overlap of the k worst (lowest) predicted pairs with the k worst true
/// pairs, as a fraction of k. Ties break by index.
double topk_coverage(std::span<const double> pred, std::span<const double> truth, int k);

/// Calibration over prediction-quantile bins: pairs are binned by the
/// prediction's decile edges (ties share a bin), and the ECE is the
/// count-weighted mean absolute gap between bin-mean prediction and truth.
double expected_calibration_error(std::span<const double> pred, std::span<const double> truth,
                                  int bins = 10);

struct SubgroupSpec {
  std::string name;
  std::vector<std::string> group_names;
  std::vector<int> group_of;  // node -> group id

  int num_groups() const { return static_cast<int>(group_names.size()); }
};

/// Nodes split into low/middle/high terciles of a raw feature column.
SubgroupSpec income_terciles(const Demographics& demographics, int income_column);
/// Nodes split by a raw share column (e.g. fraction white):
/// below `lo` -> predominantly minority, above `hi` -> predominantly white.
SubgroupSpec share_groups(const Demographics& demographics, int share_column, double lo = 0.30,
                          double hi = 0.70);

using PairMetric =
    std::function<double(std::span<const double> pred, std::span<const double> truth)>;

/// gap_g = metric(pairs restricted to group g) - metric(all pairs).
/// `pair_node` gives each pair's node for the group lookup.
std::vector<double> subgroup_gaps(const PairMetric& metric, const SubgroupSpec& groups,
                                  std::span<const double> pred, std::span<const double> truth,
                                  std::span<const int> pair_node);

/// Mean raw demographic value among the budget-share of nodes with the worst
/// (lowest) scores, divided by the overall mean.
double representation_ratio(std::span<const double> node_scores,
                            std::span<const double> raw_feature, double budget_fraction);

struct CoefficientRecovery {
  CorrelationResult correlation;
  double mae = 0.0;
  std::vector<std::string> labels;  // one per scatter point
  std::vector<double> estimated;
  std::vector<double> truth;
};

CoefficientRecovery coefficient_recovery(
    const std::vector<ReportingCoefficients>& estimated,
    const std::vector<ReportingCoefficients>& truth,
    const std::vector<std::string>& type_names = {});

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;
  double inertia = 0.0;
  bool degenerate = false;  // fewer distinct points than clusters
};

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, uint64_t seed, int restarts = 50,
                    int max_iterations = 100);

/// Per-feature one-way ANOVA of raw demographics across cluster labels.
struct ClusterFeatureTest {
  std::string feature;
  std::vector<double> cluster_means;
  AnovaResult anova;
};
std::vector<ClusterFeatureTest> demographic_tests(const std::vector<int>& labels, int k,
                                                  const Demographics& demographics);

/// Projection of each row onto the first principal component (rows centered
/// columnwise first). Sign fixed so the largest-magnitude loading is positive.
Eigen::VectorXd first_component_projections(const Eigen::MatrixXd& rows);

CorrelationResult pca_frequency_correlation(const Eigen::MatrixXd& type_vectors,
                                            std::span<const double> type_frequencies);

struct FeatureComparison {
  std::string feature;
  double worst_mean = 0.0;
  double reference_mean = 0.0;
  WelchResult test;
};

/// Demographics of the worst-error nodes (top fraction by error) against a
/// random reference set of equal size.
std::vector<FeatureComparison> node_error_analysis(std::span<const double> node_errors,
                                                   const Demographics& demographics,
                                                   double top_fraction, uint64_t seed);

// ---------------------------------------------------------------------------
// Report assembly

struct TypeMetric {
  int type = -1;
  std::string name;
  CorrelationResult correlation;
  double rmse = 0.0;
  size_t pairs = 0;
};

struct MetricReport {
  std::vector<TypeMetric> report_metrics;  // node-level report probabilities
  double mean_report_correlation = 0.0;
  double mean_report_rmse = 0.0;

  std::vector<TypeMetric> rating_metrics;  // rated types
  double mean_rating_correlation = 0.0;
  double mean_rating_rmse = 0.0;
  bool ratings_via_proxy = false;  // report probabilities stood in for ratings

  std::map<int, double> topk;  // k -> coverage over pooled rated pairs
  double ece = 0.0;
  std::vector<std::pair<std::string, double>> correlation_gaps;
  std::vector<std::pair<std::string, double>> ece_gaps;
  std::map<std::string, double> representation_ratios;
  std::optional<CoefficientRecovery> recovery;
};

/// Sparse rating truth: per type, the nodes with truth and their values.
struct RatingTruth {
  std::vector<int> types;
  std::vector<std::vector<int>> nodes;
  std::vector<std::vector<double>> values;
};

/// Mean observed rating per (node, type) over the window.
RatingTruth rating_truth_from_panel(const ObservationPanel& panel, const WeekWindow& window);
RatingTruth rating_truth_from_block(const GroundTruthBlock& block);

/// Mean node-level indicator per (node, type) over the window, n x tau.
Eigen::MatrixXd report_frequency_matrix(const ObservationPanel& panel,
                                        const WeekWindow& window);

struct MetricReportOptions {
  std::vector<int> topk = {5, 10, 20, 50};
  int ece_bins = 10;
  double budget_fraction = 0.10;
  int income_column = -1;  // raw demographic columns; -1 disables
  int share_column = -1;
};

/// Full evaluation battery. `pred_report` may be empty (ratings-only model);
/// `use_report_as_rating_proxy` evaluates ratings through the predicted
/// report probabilities (reports-only model).
MetricReport compute_metric_report(const Eigen::MatrixXd& pred_rating,
                                   const Eigen::MatrixXd& pred_report,
                                   const Eigen::MatrixXd& report_truth,
                                   const RatingTruth& rating_truth,
                                   const Demographics& demographics,
                                   const IncidentCatalog& catalog,
                                   const MetricReportOptions& options,
                                   bool use_report_as_rating_proxy = false);

std::string metric_report_to_json(const MetricReport& report,
                                  const std::map<std::string, std::string>& provenance);
void metric_report_to_csv(const MetricReport& report, const std::string& path);

}  // namespace urban
