#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "urban/model.hpp"

namespace urban {

/// Loss weights gamma1..gamma5; the weight on the unobserved-report term is
/// fixed at 1 (a variant may disable that term wholesale instead).
struct LossWeights {
  double observed_bce = 20.0;   // gamma1
  double rating_mse = 1.0;      // gamma2
  double rating_reg = 1e-6;     // gamma3
  double theta_reg = 0.0;       // gamma4
  double alpha_relu = 0.0;      // gamma5
};

struct LossComponents {
  double unobs = 0.0;
  double obs = 0.0;
  double rating = 0.0;
  double reg = 0.0;
  double theta_reg = 0.0;
  double alpha_relu = 0.0;
};

double total_loss(const LossComponents& c, const LossWeights& w, double unobs_weight = 1.0);

/// Which rows may update the reporting coefficients.
enum class HeadLearning {
  RatedTypesObservedRows,  // coefficients only for rated types, from observed-rating rows
  AllTypesAllRows,         // per-type coefficients for every type, from every row
  Unused,                  // reporting model plays no role
};

struct VariantConfig {
  std::string name;
  LossWeights weights;
  double unobs_weight = 1.0;  // 0 disables the unobserved-report term entirely
  HeadLearning head_policy = HeadLearning::RatedTypesObservedRows;
  /// Scale on reporting-head gradients arising from unobserved-rating batches.
  /// Under RatedTypesObservedRows it applies to the subsampled type only;
  /// everything else stays frozen on those batches.
  double unobserved_head_gradient = 0.0;

  bool per_type_dispatch_for_all() const {
    return head_policy == HeadLearning::AllTypesAllRows;
  }
};

/// Named training variants. Unknown names raise.
VariantConfig variant_config(const std::string& name);

/// One homogeneous batch of panel rows: either all rating-unobserved
/// (node-level) or all rating-observed (sub-node level, with true ratings).
struct BatchRows {
  bool observed = false;
  std::vector<int> node;
  std::vector<int> type;
  std::vector<int> week;
  std::vector<uint8_t> label;   // report indicator
  std::vector<double> rating;   // observed batches only

  size_t size() const { return node.size(); }
};

struct RowPredictions {
  Eigen::VectorXd probability;  // per-row report probability; empty when unused
  Eigen::VectorXd rating;       // per-row predicted rating
};

/// Clamped binary cross entropy for one row.
double bce_term(double probability, uint8_t label);

/// The six loss components on one batch. Components that do not apply to the
/// batch kind are zero. The parameter penalties are taken from the head for
/// `subsampled_type` (pass -1 when no type is subsampled).
LossComponents loss_components(const BatchRows& batch, const RowPredictions& pred,
                               const ReportingHead* head = nullptr,
                               int subsampled_type = -1);

}  // namespace urban
