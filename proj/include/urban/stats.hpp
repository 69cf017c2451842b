#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

namespace urban {

double mean(std::span<const double> xs);

/// Population standard deviation (divides by N, not N-1).
double population_sd(std::span<const double> xs);

double sigmoid(double x);
double logit(double p);

struct CorrelationResult {
  double r = 0.0;
  double p_value = 1.0;
  bool defined = false;  // false when either side has zero variance or < 3 pairs
};

/// Pearson correlation with the usual t-test p-value (two-sided).
CorrelationResult pearson(std::span<const double> x, std::span<const double> y);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  bool defined = false;
};

/// Welch two-sample t-test (unequal variances), two-sided.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

struct AnovaResult {
  double f = 0.0;
  double p_value = 1.0;
  bool defined = false;
};

/// One-way ANOVA across groups given by labels in [0, k).
AnovaResult one_way_anova(std::span<const double> values, std::span<const int> labels, int k);

/// Linear-interpolation quantile (R type 7). q in [0,1].
double quantile(std::vector<double> xs, double q);

struct LogisticFit {
  Eigen::VectorXd coefficients;
  bool converged = false;
  int iterations = 0;
};

/// Logistic regression by iteratively reweighted least squares.
/// Rows of `features` already include any intercept column.
LogisticFit logistic_regression(const Eigen::MatrixXd& features,
                                const Eigen::VectorXd& labels,
                                int max_iterations = 100,
                                double tolerance = 1e-10);

}  // namespace urban
