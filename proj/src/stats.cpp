#include "urban/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace urban {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty range");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double population_sd(std::span<const double> xs) {
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("logit argument outside (0,1)");
  return std::log(p / (1.0 - p));
}

CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
  CorrelationResult res;
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  const auto n = x.size();
  if (n < 3) return res;
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return res;
  res.r = sxy / std::sqrt(sxx * syy);
  res.defined = true;
  // Standard t-test for Pearson r.
  const double df = static_cast<double>(n) - 2.0;
  const double r2 = std::min(res.r * res.r, 1.0 - 1e-15);
  const double t = res.r * std::sqrt(df / (1.0 - r2));
  boost::math::students_t dist(df);
  res.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return res;
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  WelchResult res;
  if (a.size() < 2 || b.size() < 2) return res;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean(a), mb = mean(b);
  double va = 0.0, vb = 0.0;
  for (double x : a) va += (x - ma) * (x - ma);
  for (double x : b) vb += (x - mb) * (x - mb);
  va /= (na - 1.0);
  vb /= (nb - 1.0);
  res.mean_a = ma;
  res.mean_b = mb;
  const double se2 = va / na + vb / nb;
  if (se2 == 0.0) {
    res.defined = true;
    res.p_value = (ma == mb) ? 1.0 : 0.0;
    return res;
  }
  res.t = (ma - mb) / std::sqrt(se2);
  res.df = se2 * se2 /
           (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
  boost::math::students_t dist(res.df);
  res.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(res.t)));
  res.defined = true;
  return res;
}

AnovaResult one_way_anova(std::span<const double> values, std::span<const int> labels, int k) {
  AnovaResult res;
  if (values.size() != labels.size()) throw std::invalid_argument("anova: length mismatch");
  const auto n = values.size();
  if (k < 2 || n <= static_cast<size_t>(k)) return res;
  std::vector<double> gsum(k, 0.0);
  std::vector<int> gcount(k, 0);
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const int g = labels[i];
    if (g < 0 || g >= k) throw std::invalid_argument("anova: label out of range");
    gsum[g] += values[i];
    gcount[g] += 1;
    total += values[i];
  }
  int nonempty = 0;
  for (int g = 0; g < k; ++g)
    if (gcount[g] > 0) ++nonempty;
  if (nonempty < 2) return res;
  const double grand = total / static_cast<double>(n);
  double ss_between = 0.0, ss_within = 0.0;
  for (int g = 0; g < k; ++g) {
    if (gcount[g] == 0) continue;
    const double gm = gsum[g] / gcount[g];
    ss_between += gcount[g] * (gm - grand) * (gm - grand);
  }
  for (size_t i = 0; i < n; ++i) {
    const double gm = gsum[labels[i]] / gcount[labels[i]];
    ss_within += (values[i] - gm) * (values[i] - gm);
  }
  const double df_between = nonempty - 1;
  const double df_within = static_cast<double>(n) - nonempty;
  if (df_within <= 0.0 || ss_within == 0.0) return res;
  res.f = (ss_between / df_between) / (ss_within / df_within);
  boost::math::fisher_f dist(df_between, df_within);
  res.p_value = boost::math::cdf(boost::math::complement(dist, res.f));
  res.defined = true;
  return res;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile of empty range");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile level outside [0,1]");
  std::sort(xs.begin(), xs.end());
  const double h = q * (static_cast<double>(xs.size()) - 1.0);
  const auto lo = static_cast<size_t>(std::floor(h));
  const auto hi = static_cast<size_t>(std::ceil(h));
  if (lo == hi) return xs[lo];
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

LogisticFit logistic_regression(const Eigen::MatrixXd& features,
                                const Eigen::VectorXd& labels,
                                int max_iterations, double tolerance) {
  const auto n = features.rows();
  const auto d = features.cols();
  if (labels.size() != n) throw std::invalid_argument("logistic_regression: shape mismatch");
  LogisticFit fit;
  fit.coefficients = Eigen::VectorXd::Zero(d);
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd eta = features * fit.coefficients;
    Eigen::VectorXd p = eta.unaryExpr([](double v) { return sigmoid(v); });
    Eigen::VectorXd w = p.array() * (1.0 - p.array());
    // Ridge floor keeps the Newton system solvable on (quasi-)separable data.
    Eigen::MatrixXd hessian = features.transpose() * w.asDiagonal() * features;
    hessian.diagonal().array() += 1e-10;
    Eigen::VectorXd grad = features.transpose() * (labels - p);
    Eigen::VectorXd step = hessian.ldlt().solve(grad);
    if (step.norm() > 10.0) step *= 10.0 / step.norm();
    fit.coefficients += step;
    fit.iterations = it + 1;
    if (step.lpNorm<Eigen::Infinity>() < tolerance) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

}  // namespace urban
