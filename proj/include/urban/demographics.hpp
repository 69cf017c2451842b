#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace urban {

/// Per-node feature matrix. `features` holds the z-scored columns plus a
/// trailing constant-1 intercept column; `raw` keeps the original values for
/// subgroup definitions and reporting.
struct Demographics {
  Eigen::MatrixXd raw;       // n x D
  Eigen::MatrixXd features;  // n x (D+1), intercept last
  std::vector<std::string> names;
  Eigen::VectorXd column_mean;  // length D
  Eigen::VectorXd column_sd;    // length D, population sd

  int n() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }  // D + 1
};

/// Z-scores every column (population sd) and appends the intercept column.
/// Throws if a column has zero variance, naming the offending column.
Demographics normalize_demographics(const Eigen::MatrixXd& raw,
                                    std::vector<std::string> names = {});

}  // namespace urban
