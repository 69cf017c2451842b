#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "urban/demographics.hpp"
#include "urban/panel.hpp"

namespace urban {

/// Panel on disk = columnar CSV (one row per observation) + JSON header with
/// dimensions, type catalog and the feature normalization record.
/// CSV columns: node, sub_unit, type, week, report, rating
///   - node-level indicator rows leave sub_unit and rating blank (zeros are
///     implicit, only weeks with a report are listed)
///   - sub-node report rows leave rating blank
///   - rating rows carry both the sub-node indicator and the rating value
void save_panel(const ObservationPanel& panel, const std::string& csv_path,
                const std::string& json_path,
                const Demographics* demographics = nullptr);

ObservationPanel load_panel(const std::string& csv_path, const std::string& json_path);

/// Raw demographics: CSV with a header of feature names, one row per node.
std::pair<Eigen::MatrixXd, std::vector<std::string>> load_demographics_csv(
    const std::string& path);
void save_demographics_csv(const Eigen::MatrixXd& raw,
                           const std::vector<std::string>& names,
                           const std::string& path);

/// Adjacency: CSV with header u,v and one undirected edge per row.
std::vector<std::pair<int, int>> load_edges_csv(const std::string& path);
void save_edges_csv(const std::vector<std::pair<int, int>>& edges, const std::string& path);

/// Ground truth attached to generated panels, for evaluation.
struct GroundTruthBlock {
  WeekWindow window;
  std::vector<int> types;                       // rated types, ascending
  std::vector<double> alpha;                    // aligned with types
  std::vector<Eigen::VectorXd> theta;           // aligned with types, intercept last
  std::vector<std::vector<int>> pattern_nodes;  // aligned with types
  std::vector<std::vector<double>> values;      // aligned with pattern_nodes
};

struct GroundTruthSidecar {
  std::string mode;  // "semi" or "full"
  uint64_t seed = 0;
  std::vector<std::string> theta_names;
  GroundTruthBlock train;
  GroundTruthBlock test;
};

void save_ground_truth(const GroundTruthSidecar& truth, const std::string& path);
GroundTruthSidecar load_ground_truth(const std::string& path);

}  // namespace urban
