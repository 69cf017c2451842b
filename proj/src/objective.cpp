#include "urban/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace urban {

double total_loss(const LossComponents& c, const LossWeights& w, double unobs_weight) {
  return unobs_weight * c.unobs + w.observed_bce * c.obs + w.rating_mse * c.rating +
         w.rating_reg * c.reg + w.theta_reg * c.theta_reg + w.alpha_relu * c.alpha_relu;
}

VariantConfig variant_config(const std::string& name) {
  VariantConfig v;
  v.name = name;
  if (name == "full") {
    v.weights = LossWeights{20.0, 1.0, 1e-6, 0.0, 0.0};
    v.head_policy = HeadLearning::RatedTypesObservedRows;
    v.unobserved_head_gradient = 0.0;
  } else if (name == "reports_only") {
    // No rating terms; coefficients for every type from every datapoint.
    v.weights = LossWeights{20.0, 0.0, 1e-6, 0.0, 0.0};
    v.head_policy = HeadLearning::AllTypesAllRows;
    v.unobserved_head_gradient = 1.0;
  } else if (name == "ratings_only") {
    // No report terms; the reporting model is unused.
    v.weights = LossWeights{0.0, 1.0, 1e-6, 0.0, 0.0};
    v.unobs_weight = 0.0;
    v.head_policy = HeadLearning::Unused;
  } else if (name == "subsampled_full_synth") {
    v.weights = LossWeights{20.0, 10.0, 1e-6, 0.0, 0.0};
    v.head_policy = HeadLearning::RatedTypesObservedRows;
    v.unobserved_head_gradient = 0.0;
  } else if (name == "subsampled_full_real") {
    v.weights = LossWeights{20.0, 10.0, 1e-6, 0.1, 0.1};
    v.head_policy = HeadLearning::RatedTypesObservedRows;
    v.unobserved_head_gradient = 0.6;
  } else {
    throw std::invalid_argument("variant_config: unknown variant '" + name + "'");
  }
  return v;
}

double bce_term(double probability, uint8_t label) {
  if (std::isnan(probability))
    throw std::domain_error("bce_term: probability is not a number");
  const double p = std::clamp(probability, 1e-7, 1.0 - 1e-7);
  return label ? -std::log(p) : -std::log(1.0 - p);
}

LossComponents loss_components(const BatchRows& batch, const RowPredictions& pred,
                               const ReportingHead* head, int subsampled_type) {
  LossComponents c;
  const auto rows = batch.size();
  if (batch.observed) {
    if (batch.rating.size() != rows)
      throw std::invalid_argument("loss_components: observed batch without ratings");
    for (size_t j = 0; j < rows; ++j) {
      if (pred.probability.size() > 0)
        c.obs += bce_term(pred.probability[j], batch.label[j]);
      const double err = pred.rating[j] - batch.rating[j];
      c.rating += err * err;
    }
  } else {
    for (size_t j = 0; j < rows; ++j) {
      if (pred.probability.size() > 0)
        c.unobs += bce_term(pred.probability[j], batch.label[j]);
      c.reg += pred.rating[j] * pred.rating[j];
    }
  }
  if (head != nullptr && subsampled_type >= 0) {
    const auto d = head->theta.cols();
    // The intercept component is excluded from the demographic-norm penalty.
    c.theta_reg = head->theta.row(subsampled_type).head(d - 1).squaredNorm();
    c.alpha_relu = std::max(0.0, head->alpha[subsampled_type]);
  }
  return c;
}

}  // namespace urban
