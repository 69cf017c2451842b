#include "urban/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "urban/rng.hpp"

namespace urban {

CorrelationResult pair_correlation(std::span<const double> pred,
                                   std::span<const double> truth) {
  return pearson(pred, truth);
}

double pair_rmse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("pair_rmse: empty or mismatched inputs");
  double sum = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

namespace {

std::vector<size_t> lowest_k_indices(std::span<const double> values, int k) {
  std::vector<size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (values[a] != values[b]) return values[a] < values[b];
    return a < b;
  });
  order.resize(k);
  return order;
}

}  // namespace

double topk_coverage(std::span<const double> pred, std::span<const double> truth, int k) {
  if (pred.size() != truth.size())
    throw std::invalid_argument("topk_coverage: length mismatch");
  if (k < 1 || static_cast<size_t>(k) > pred.size())
    throw std::invalid_argument("topk_coverage: k outside [1, pairs]");
  const auto worst_pred = lowest_k_indices(pred, k);
  const auto worst_truth = lowest_k_indices(truth, k);
  const std::set<size_t> truth_set(worst_truth.begin(), worst_truth.end());
  int hits = 0;
  for (size_t idx : worst_pred) hits += truth_set.count(idx);
  return static_cast<double>(hits) / k;
}

double expected_calibration_error(std::span<const double> pred, std::span<const double> truth,
                                  int bins) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("expected_calibration_error: empty or mismatched inputs");
  if (bins < 1) throw std::invalid_argument("expected_calibration_error: bins must be >= 1");
  std::vector<double> edges;
  edges.reserve(bins - 1);
  std::vector<double> sorted(pred.begin(), pred.end());
  for (int b = 1; b < bins; ++b)
    edges.push_back(quantile(sorted, static_cast<double>(b) / bins));
  auto bin_of = [&](double v) {
    int b = 0;
    for (double e : edges)
      if (e < v) ++b;
    return b;
  };
  std::vector<double> pred_sum(bins, 0.0), truth_sum(bins, 0.0);
  std::vector<int> count(bins, 0);
  for (size_t i = 0; i < pred.size(); ++i) {
    const int b = bin_of(pred[i]);
    pred_sum[b] += pred[i];
    truth_sum[b] += truth[i];
    count[b] += 1;
  }
  double ece = 0.0;
  for (int b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const double gap = std::abs(pred_sum[b] / count[b] - truth_sum[b] / count[b]);
    ece += (static_cast<double>(count[b]) / pred.size()) * gap;
  }
  return ece;
}

SubgroupSpec income_terciles(const Demographics& demographics, int income_column) {
  const auto n = demographics.raw.rows();
  std::vector<double> values(demographics.raw.col(income_column).data(),
                             demographics.raw.col(income_column).data() + n);
  const double lo = quantile(values, 1.0 / 3.0);
  const double hi = quantile(values, 2.0 / 3.0);
  SubgroupSpec spec;
  spec.name = "income";
  spec.group_names = {"low", "middle", "high"};
  spec.group_of.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = demographics.raw(i, income_column);
    spec.group_of[i] = v <= lo ? 0 : (v <= hi ? 1 : 2);
  }
  return spec;
}

SubgroupSpec share_groups(const Demographics& demographics, int share_column, double lo,
                          double hi) {
  const auto n = demographics.raw.rows();
  SubgroupSpec spec;
  spec.name = "share";
  spec.group_names = {"predominantly_minority", "mixed", "predominantly_white"};
  spec.group_of.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = demographics.raw(i, share_column);
    spec.group_of[i] = v < lo ? 0 : (v <= hi ? 1 : 2);
  }
  return spec;
}

std::vector<double> subgroup_gaps(const PairMetric& metric, const SubgroupSpec& groups,
                                  std::span<const double> pred, std::span<const double> truth,
                                  std::span<const int> pair_node) {
  if (pred.size() != truth.size() || pred.size() != pair_node.size())
    throw std::invalid_argument("subgroup_gaps: length mismatch");
  const double overall = metric(pred, truth);
  std::vector<double> gaps(groups.num_groups(), 0.0);
  for (int g = 0; g < groups.num_groups(); ++g) {
    std::vector<double> gp, gt;
    for (size_t i = 0; i < pred.size(); ++i) {
      if (groups.group_of[pair_node[i]] != g) continue;
      gp.push_back(pred[i]);
      gt.push_back(truth[i]);
    }
    gaps[g] = gp.empty() ? 0.0 : metric(gp, gt) - overall;
  }
  return gaps;
}

double representation_ratio(std::span<const double> node_scores,
                            std::span<const double> raw_feature, double budget_fraction) {
  if (node_scores.size() != raw_feature.size() || node_scores.empty())
    throw std::invalid_argument("representation_ratio: empty or mismatched inputs");
  if (!(budget_fraction > 0.0 && budget_fraction <= 1.0))
    throw std::invalid_argument("representation_ratio: budget outside (0,1]");
  const int k = std::max(
      1, static_cast<int>(std::lround(budget_fraction * static_cast<double>(node_scores.size()))));
  const auto selected = lowest_k_indices(node_scores, k);
  double sel_sum = 0.0;
  for (size_t idx : selected) sel_sum += raw_feature[idx];
  const double overall = mean(raw_feature);
  if (overall == 0.0) throw std::domain_error("representation_ratio: zero overall mean");
  return (sel_sum / k) / overall;
}

CoefficientRecovery coefficient_recovery(const std::vector<ReportingCoefficients>& estimated,
                                         const std::vector<ReportingCoefficients>& truth,
                                         const std::vector<std::string>& type_names) {
  if (estimated.size() != truth.size())
    throw std::invalid_argument("coefficient_recovery: type count mismatch");
  CoefficientRecovery rec;
  for (size_t k = 0; k < estimated.size(); ++k) {
    const std::string base =
        k < type_names.size() ? type_names[k] : "type_" + std::to_string(k);
    rec.labels.push_back(base + ":alpha");
    rec.estimated.push_back(estimated[k].alpha);
    rec.truth.push_back(truth[k].alpha);
    if (estimated[k].theta.size() != truth[k].theta.size())
      throw std::invalid_argument("coefficient_recovery: theta length mismatch");
    for (Eigen::Index j = 0; j < truth[k].theta.size(); ++j) {
      rec.labels.push_back(base + ":theta_" + std::to_string(j));
      rec.estimated.push_back(estimated[k].theta[j]);
      rec.truth.push_back(truth[k].theta[j]);
    }
  }
  rec.correlation = pearson(rec.estimated, rec.truth);
  double abs_sum = 0.0;
  for (size_t i = 0; i < rec.estimated.size(); ++i)
    abs_sum += std::abs(rec.estimated[i] - rec.truth[i]);
  rec.mae = rec.estimated.empty() ? 0.0 : abs_sum / rec.estimated.size();
  return rec;
}

namespace {

double assign_labels(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
                     std::vector<int>& labels) {
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_k = 0;
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      const double d = (points.row(i) - centroids.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        best_k = static_cast<int>(c);
      }
    }
    labels[i] = best_k;
    inertia += best;
  }
  return inertia;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, uint64_t seed, int restarts,
                    int max_iterations) {
  const auto n = points.rows();
  if (k < 1 || k > n) throw std::invalid_argument("kmeans: k outside [1, points]");
  std::set<std::vector<double>> distinct;
  for (Eigen::Index i = 0; i < n && static_cast<int>(distinct.size()) < k; ++i)
    distinct.insert(std::vector<double>(points.row(i).data(),
                                        points.row(i).data() + points.cols()));
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  best.degenerate = static_cast<int>(distinct.size()) < k;

  for (int restart = 0; restart < restarts; ++restart) {
    auto rng = substream(seed, "kmeans", static_cast<uint64_t>(restart));
    // Seed centroids from distinct rows where possible.
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (size_t i = n; i > 1; --i) {
      std::uniform_int_distribution<size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(rng)]);
    }
    Eigen::MatrixXd centroids(k, points.cols());
    int placed = 0;
    std::set<std::vector<double>> used;
    for (size_t idx : order) {
      std::vector<double> key(points.row(idx).data(), points.row(idx).data() + points.cols());
      if (used.count(key)) continue;
      centroids.row(placed++) = points.row(idx);
      used.insert(key);
      if (placed == k) break;
    }
    for (size_t idx : order) {
      if (placed == k) break;
      centroids.row(placed++) = points.row(idx);
    }

    std::vector<int> labels(n, 0);
    double inertia = assign_labels(points, centroids, labels);
    for (int it = 0; it < max_iterations; ++it) {
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
      std::vector<int> counts(k, 0);
      for (Eigen::Index i = 0; i < n; ++i) {
        sums.row(labels[i]) += points.row(i);
        counts[labels[i]] += 1;
      }
      for (int c = 0; c < k; ++c) {
        if (counts[c] > 0) {
          centroids.row(c) = sums.row(c) / counts[c];
        } else {
          // Re-seed an empty cluster at the point farthest from its centroid.
          Eigen::Index farthest = 0;
          double worst = -1.0;
          for (Eigen::Index i = 0; i < n; ++i) {
            const double d = (points.row(i) - centroids.row(labels[i])).squaredNorm();
            if (d > worst) {
              worst = d;
              farthest = i;
            }
          }
          centroids.row(c) = points.row(farthest);
        }
      }
      const double next = assign_labels(points, centroids, labels);
      if (next >= inertia - 1e-12) {
        inertia = next;
        break;
      }
      inertia = next;
    }
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.labels = labels;
      best.centroids = centroids;
    }
  }
  return best;
}

std::vector<ClusterFeatureTest> demographic_tests(const std::vector<int>& labels, int k,
                                                  const Demographics& demographics) {
  if (static_cast<Eigen::Index>(labels.size()) != demographics.raw.rows())
    throw std::invalid_argument("demographic_tests: label count mismatch");
  std::vector<ClusterFeatureTest> tests;
  for (Eigen::Index j = 0; j < demographics.raw.cols(); ++j) {
    ClusterFeatureTest t;
    t.feature = demographics.names[j];
    std::vector<double> values(demographics.raw.col(j).data(),
                               demographics.raw.col(j).data() + demographics.raw.rows());
    t.anova = one_way_anova(values, labels, k);
    std::vector<double> sums(k, 0.0);
    std::vector<int> counts(k, 0);
    for (size_t i = 0; i < labels.size(); ++i) {
      sums[labels[i]] += values[i];
      counts[labels[i]] += 1;
    }
    for (int c = 0; c < k; ++c)
      t.cluster_means.push_back(counts[c] > 0 ? sums[c] / counts[c] : 0.0);
    tests.push_back(std::move(t));
  }
  return tests;
}

Eigen::VectorXd first_component_projections(const Eigen::MatrixXd& rows) {
  if (rows.rows() < 2) throw std::invalid_argument("first_component_projections: need >= 2 rows");
  Eigen::MatrixXd centered = rows.rowwise() - rows.colwise().mean();
  // Work in the smaller dimension via the Gram matrix.
  const Eigen::MatrixXd gram = centered * centered.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  Eigen::VectorXd u = solver.eigenvectors().col(gram.rows() - 1);
  const double lambda = std::max(0.0, solver.eigenvalues()(gram.rows() - 1));
  Eigen::VectorXd projections = u * std::sqrt(lambda);
  // Fix the sign convention: largest-magnitude projection positive.
  Eigen::Index arg_max = 0;
  projections.array().abs().maxCoeff(&arg_max);
  if (projections[arg_max] < 0.0) projections = -projections;
  return projections;
}

CorrelationResult pca_frequency_correlation(const Eigen::MatrixXd& type_vectors,
                                            std::span<const double> type_frequencies) {
  if (type_vectors.rows() != static_cast<Eigen::Index>(type_frequencies.size()))
    throw std::invalid_argument("pca_frequency_correlation: type count mismatch");
  if (type_vectors.rows() < 3) return CorrelationResult{};
  const Eigen::VectorXd proj = first_component_projections(type_vectors);
  std::vector<double> p(proj.data(), proj.data() + proj.size());
  return pearson(p, type_frequencies);
}

std::vector<FeatureComparison> node_error_analysis(std::span<const double> node_errors,
                                                   const Demographics& demographics,
                                                   double top_fraction, uint64_t seed) {
  const auto n = node_errors.size();
  if (static_cast<Eigen::Index>(n) != demographics.raw.rows())
    throw std::invalid_argument("node_error_analysis: node count mismatch");
  const int k =
      std::max(1, static_cast<int>(std::lround(top_fraction * static_cast<double>(n))));
  // Worst = largest error; reuse the ascending helper on negated errors.
  std::vector<double> negated(node_errors.begin(), node_errors.end());
  for (double& v : negated) v = -v;
  const auto worst = lowest_k_indices(negated, k);

  auto rng = substream(seed, "error_reference");
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  std::vector<size_t> reference(order.begin(), order.begin() + k);

  std::vector<FeatureComparison> out;
  for (Eigen::Index j = 0; j < demographics.raw.cols(); ++j) {
    FeatureComparison cmp;
    cmp.feature = demographics.names[j];
    std::vector<double> a, b;
    for (size_t idx : worst) a.push_back(demographics.raw(idx, j));
    for (size_t idx : reference) b.push_back(demographics.raw(idx, j));
    cmp.test = welch_t_test(a, b);
    cmp.worst_mean = mean(a);
    cmp.reference_mean = mean(b);
    out.push_back(std::move(cmp));
  }
  return out;
}

RatingTruth rating_truth_from_panel(const ObservationPanel& panel, const WeekWindow& window) {
  std::map<std::pair<int, int>, std::pair<double, int>> acc;  // (type, node) -> (sum, count)
  for (const auto& r : panel.ratings) {
    if (r.week < window.begin || r.week >= window.end) continue;
    auto& cell = acc[{r.type, r.node}];
    cell.first += r.rating;
    cell.second += 1;
  }
  RatingTruth truth;
  int current = -1;
  for (const auto& [key, cell] : acc) {
    if (key.first != current) {
      truth.types.push_back(key.first);
      truth.nodes.emplace_back();
      truth.values.emplace_back();
      current = key.first;
    }
    truth.nodes.back().push_back(key.second);
    truth.values.back().push_back(cell.first / cell.second);
  }
  return truth;
}

RatingTruth rating_truth_from_block(const GroundTruthBlock& block) {
  RatingTruth truth;
  truth.types = block.types;
  truth.nodes = block.pattern_nodes;
  truth.values = block.values;
  return truth;
}

Eigen::MatrixXd report_frequency_matrix(const ObservationPanel& panel,
                                        const WeekWindow& window) {
  Eigen::MatrixXd freq(panel.n, panel.tau());
  for (int i = 0; i < panel.n; ++i)
    for (int k = 0; k < panel.tau(); ++k)
      freq(i, k) = empirical_report_frequency(panel, i, k, window);
  return freq;
}

MetricReport compute_metric_report(const Eigen::MatrixXd& pred_rating,
                                   const Eigen::MatrixXd& pred_report,
                                   const Eigen::MatrixXd& report_truth,
                                   const RatingTruth& rating_truth,
                                   const Demographics& demographics,
                                   const IncidentCatalog& catalog,
                                   const MetricReportOptions& options,
                                   bool use_report_as_rating_proxy) {
  MetricReport report;
  const auto n = pred_rating.rows();
  const auto tau = pred_rating.cols();

  if (pred_report.size() > 0) {
    double corr_sum = 0.0, rmse_sum = 0.0;
    int defined = 0;
    for (Eigen::Index k = 0; k < tau; ++k) {
      TypeMetric m;
      m.type = static_cast<int>(k);
      m.name = catalog.names[k];
      std::vector<double> pred(pred_report.col(k).data(), pred_report.col(k).data() + n);
      std::vector<double> truth(report_truth.col(k).data(), report_truth.col(k).data() + n);
      m.correlation = pair_correlation(pred, truth);
      m.rmse = pair_rmse(pred, truth);
      m.pairs = pred.size();
      if (m.correlation.defined) {
        corr_sum += m.correlation.r;
        rmse_sum += m.rmse;
        ++defined;
      }
      report.report_metrics.push_back(std::move(m));
    }
    if (defined > 0) {
      report.mean_report_correlation = corr_sum / defined;
      report.mean_report_rmse = rmse_sum / defined;
    }
  }

  const Eigen::MatrixXd& rating_source =
      use_report_as_rating_proxy ? pred_report : pred_rating;
  report.ratings_via_proxy = use_report_as_rating_proxy;

  std::vector<double> pooled_pred, pooled_truth;
  std::vector<int> pooled_node;
  double corr_sum = 0.0, rmse_sum = 0.0;
  int defined = 0;
  for (size_t idx = 0; idx < rating_truth.types.size(); ++idx) {
    const int k = rating_truth.types[idx];
    TypeMetric m;
    m.type = k;
    m.name = catalog.names[k];
    std::vector<double> pred, truth;
    for (size_t j = 0; j < rating_truth.nodes[idx].size(); ++j) {
      const int i = rating_truth.nodes[idx][j];
      pred.push_back(rating_source(i, k));
      truth.push_back(rating_truth.values[idx][j]);
      pooled_node.push_back(i);
    }
    pooled_pred.insert(pooled_pred.end(), pred.begin(), pred.end());
    pooled_truth.insert(pooled_truth.end(), truth.begin(), truth.end());
    m.correlation = pair_correlation(pred, truth);
    m.rmse = pair_rmse(pred, truth);
    m.pairs = pred.size();
    if (m.correlation.defined) {
      corr_sum += m.correlation.r;
      rmse_sum += m.rmse;
      ++defined;
    }
    report.rating_metrics.push_back(std::move(m));
  }
  if (defined > 0) {
    report.mean_rating_correlation = corr_sum / defined;
    report.mean_rating_rmse = rmse_sum / defined;
  }

  if (!pooled_pred.empty()) {
    for (int k : options.topk)
      if (static_cast<size_t>(k) <= pooled_pred.size())
        report.topk[k] = topk_coverage(pooled_pred, pooled_truth, k);
    report.ece = expected_calibration_error(pooled_pred, pooled_truth, options.ece_bins);

    const PairMetric corr_metric = [](std::span<const double> p, std::span<const double> t) {
      const auto c = pearson(p, t);
      return c.defined ? c.r : 0.0;
    };
    const PairMetric ece_metric = [&](std::span<const double> p, std::span<const double> t) {
      return expected_calibration_error(p, t, options.ece_bins);
    };
    auto add_gaps = [&](const SubgroupSpec& spec) {
      const auto cg = subgroup_gaps(corr_metric, spec, pooled_pred, pooled_truth, pooled_node);
      const auto eg = subgroup_gaps(ece_metric, spec, pooled_pred, pooled_truth, pooled_node);
      for (int g = 0; g < spec.num_groups(); ++g) {
        report.correlation_gaps.emplace_back(spec.name + ":" + spec.group_names[g], cg[g]);
        report.ece_gaps.emplace_back(spec.name + ":" + spec.group_names[g], eg[g]);
      }
    };
    if (options.income_column >= 0)
      add_gaps(income_terciles(demographics, options.income_column));
    if (options.share_column >= 0) {
      SubgroupSpec race = share_groups(demographics, options.share_column);
      race.name = "race";
      add_gaps(race);
    }

    // Budget targeting: per-node mean predicted rating over rated types.
    std::vector<double> node_score;
    node_score.reserve(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double sum = 0.0;
      int count = 0;
      for (size_t idx = 0; idx < rating_truth.types.size(); ++idx) {
        sum += rating_source(i, rating_truth.types[idx]);
        ++count;
      }
      node_score.push_back(count > 0 ? sum / count : 0.0);
    }
    if (options.income_column >= 0) {
      std::vector<double> col(demographics.raw.col(options.income_column).data(),
                              demographics.raw.col(options.income_column).data() + n);
      report.representation_ratios["income"] =
          representation_ratio(node_score, col, options.budget_fraction);
    }
    if (options.share_column >= 0) {
      std::vector<double> col(demographics.raw.col(options.share_column).data(),
                              demographics.raw.col(options.share_column).data() + n);
      report.representation_ratios["race"] =
          representation_ratio(node_score, col, options.budget_fraction);
    }
  }
  return report;
}

namespace {

nlohmann::ordered_json type_metric_json(const TypeMetric& m) {
  nlohmann::ordered_json j;
  j["type"] = m.type;
  j["name"] = m.name;
  j["correlation"] = m.correlation.defined ? nlohmann::ordered_json(m.correlation.r)
                                           : nlohmann::ordered_json(nullptr);
  j["p_value"] = m.correlation.defined ? nlohmann::ordered_json(m.correlation.p_value)
                                       : nlohmann::ordered_json(nullptr);
  j["rmse"] = m.rmse;
  j["pairs"] = m.pairs;
  return j;
}

}  // namespace

std::string metric_report_to_json(const MetricReport& report,
                                  const std::map<std::string, std::string>& provenance) {
  nlohmann::ordered_json j;
  for (const auto& [key, value] : provenance) j[key] = value;
  j["mean_report_correlation"] = report.mean_report_correlation;
  j["mean_report_rmse"] = report.mean_report_rmse;
  j["mean_rating_correlation"] = report.mean_rating_correlation;
  j["mean_rating_rmse"] = report.mean_rating_rmse;
  j["ratings_via_proxy"] = report.ratings_via_proxy;
  j["ece"] = report.ece;
  nlohmann::ordered_json topk;
  for (const auto& [k, v] : report.topk) topk["top_" + std::to_string(k)] = v;
  j["topk_coverage"] = std::move(topk);
  nlohmann::ordered_json cgaps, egaps;
  for (const auto& [name, v] : report.correlation_gaps) cgaps[name] = v;
  for (const auto& [name, v] : report.ece_gaps) egaps[name] = v;
  j["correlation_gaps"] = std::move(cgaps);
  j["ece_gaps"] = std::move(egaps);
  nlohmann::ordered_json ratios;
  for (const auto& [name, v] : report.representation_ratios) ratios[name] = v;
  j["representation_ratios"] = std::move(ratios);
  nlohmann::ordered_json reports_arr = nlohmann::ordered_json::array();
  for (const auto& m : report.report_metrics) reports_arr.push_back(type_metric_json(m));
  j["report_metrics"] = std::move(reports_arr);
  nlohmann::ordered_json ratings_arr = nlohmann::ordered_json::array();
  for (const auto& m : report.rating_metrics) ratings_arr.push_back(type_metric_json(m));
  j["rating_metrics"] = std::move(ratings_arr);
  if (report.recovery.has_value()) {
    nlohmann::ordered_json rec;
    rec["correlation"] = report.recovery->correlation.r;
    rec["mae"] = report.recovery->mae;
    rec["points"] = report.recovery->labels.size();
    j["coefficient_recovery"] = std::move(rec);
  }
  return j.dump(2) + "\n";
}

void metric_report_to_csv(const MetricReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "section,type,name,metric,value\n";
  char buf[64];
  auto row = [&](const std::string& section, int type, const std::string& name,
                 const std::string& metric, double value) {
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    out << section << "," << type << "," << name << "," << metric << "," << buf << "\n";
  };
  for (const auto& m : report.report_metrics) {
    if (m.correlation.defined) row("report", m.type, m.name, "correlation", m.correlation.r);
    row("report", m.type, m.name, "rmse", m.rmse);
  }
  for (const auto& m : report.rating_metrics) {
    if (m.correlation.defined) row("rating", m.type, m.name, "correlation", m.correlation.r);
    row("rating", m.type, m.name, "rmse", m.rmse);
  }
  row("aggregate", -1, "", "mean_report_correlation", report.mean_report_correlation);
  row("aggregate", -1, "", "mean_rating_correlation", report.mean_rating_correlation);
  row("aggregate", -1, "", "ece", report.ece);
  for (const auto& [k, v] : report.topk)
    row("aggregate", -1, "", "top_" + std::to_string(k), v);
  for (const auto& [name, v] : report.correlation_gaps)
    row("correlation_gap", -1, name, "gap", v);
  for (const auto& [name, v] : report.ece_gaps) row("ece_gap", -1, name, "gap", v);
  for (const auto& [name, v] : report.representation_ratios)
    row("representation_ratio", -1, name, "ratio", v);
}

}  // namespace urban
