#include <doctest.h>

#include <random>
#include <set>

#include "urban/panel.hpp"
#include "urban/rng.hpp"
#include "urban/stats.hpp"
#include "urban/synthetic.hpp"

using namespace urban;

TEST_SUITE_BEGIN("synthetic");

TEST_CASE("logit values used by the generator") {
  CHECK(logit(0.5) == doctest::Approx(0.0));
  // e/(1+e) maps back to exactly 1; with alpha=-2 and no shift the rating is -0.5.
  const double p = std::exp(1.0) / (1.0 + std::exp(1.0));
  CHECK(logit(p) == doctest::Approx(1.0));
  CHECK((logit(p) - 0.0) / -2.0 == doctest::Approx(-0.5));
  // A zero frequency clamped at 0.01 enters as logit(0.01).
  CHECK(logit(0.01) == doctest::Approx(-4.59512).epsilon(1e-5));
  CHECK_THROWS(logit(0.0));
  CHECK_THROWS(logit(1.0));
}

TEST_CASE("reference fit with one rated type equals that type's own fit") {
  // Build a panel with a single rated type and clearly separated labels.
  IncidentCatalog catalog;
  catalog.names = {"only"};
  catalog.has_observed_ratings = {1};
  catalog.agency = {""};
  ObservationPanel panel = make_empty_panel(40, catalog, 4, "2022-01-03");
  Eigen::MatrixXd raw(40, 1);
  auto rng = substream(3, "fixture");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 40; ++i) raw(i, 0) = gauss(rng);
  const Demographics demo = normalize_demographics(raw, {"x"});
  for (int i = 0; i < 40; ++i) {
    for (int t = 0; t < 4; ++t) {
      RatingObs obs;
      obs.sub_unit = i;
      obs.node = i;
      obs.type = 0;
      obs.week = t;
      obs.rating = gauss(rng);
      const double p = sigmoid(-0.8 * obs.rating + 0.5 * demo.features(i, 0) - 0.3);
      obs.report = unit(rng) < p ? 1 : 0;
      panel.sub_to_node[i] = i;
      panel.ratings.push_back(obs);
    }
  }
  const Eigen::VectorXd mean_fit = fit_reference_coefficients(panel, demo, {0, 4});
  // With only one usable type the mean is exactly that type's fit; rebuild it
  // by hand through the same regression.
  Eigen::MatrixXd features(panel.ratings.size(), 3);
  Eigen::VectorXd labels(panel.ratings.size());
  for (size_t j = 0; j < panel.ratings.size(); ++j) {
    features(j, 0) = panel.ratings[j].rating;
    features(j, 1) = demo.features(panel.ratings[j].node, 0);
    features(j, 2) = 1.0;
    labels[j] = panel.ratings[j].report;
  }
  const auto fit = logistic_regression(features, labels);
  CHECK((mean_fit - fit.coefficients).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("logistic fit recovers known coefficients within 0.1") {
  // Generate-and-refit oracle: n=500, D=2 plus intercept.
  auto rng = substream(11, "refit");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = 500;
  Eigen::MatrixXd features(n, 3);
  Eigen::VectorXd labels(n);
  const Eigen::Vector3d truth(0.9, -0.6, 0.2);
  for (int i = 0; i < n; ++i) {
    features(i, 0) = gauss(rng);
    features(i, 1) = gauss(rng);
    features(i, 2) = 1.0;
    labels[i] = unit(rng) < sigmoid(truth.dot(features.row(i))) ? 1.0 : 0.0;
  }
  const auto fit = logistic_regression(features, labels);
  CHECK(fit.converged);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(fit.coefficients[j] - truth[j]) < 0.1);
}

TEST_CASE("coefficient draws: zero sd collapses to the mean, same seed repeats") {
  Eigen::VectorXd mean(3);
  mean << 0.5, -0.2, 0.1;
  const auto exact = draw_type_coefficients(mean, 0.0, 9, 4);
  for (const auto& theta : exact) CHECK((theta - mean).cwiseAbs().maxCoeff() == 0.0);
  const auto a = draw_type_coefficients(mean, 0.1, 42, 4);
  const auto b = draw_type_coefficients(mean, 0.1, 42, 4);
  for (int k = 0; k < 4; ++k) CHECK((a[k] - b[k]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a[0] - a[1]).cwiseAbs().maxCoeff() > 0.0);
  CHECK_THROWS(draw_type_coefficients(mean, -0.1, 0, 1));
}

TEST_CASE("draw sample mean approaches the target mean") {
  Eigen::VectorXd mean(1);
  mean << 0.7;
  const double sd = 0.1;
  const auto draws = draw_type_coefficients(mean, sd, 123, 10000);
  double sum = 0.0;
  for (const auto& theta : draws) sum += theta[0];
  // CLT bound: 3 standard errors with 10,000 draws.
  CHECK(std::abs(sum / 10000.0 - 0.7) < 3.0 * sd / 100.0);
}

TEST_CASE("generated ratings invert the reporting model exactly") {
  auto rng = substream(5, "gen");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.02, 0.9);
  const int n = 30;
  Eigen::MatrixXd raw(n, 2);
  for (int i = 0; i < n; ++i) {
    raw(i, 0) = gauss(rng);
    raw(i, 1) = gauss(rng);
  }
  const Demographics demo = normalize_demographics(raw);
  Eigen::VectorXd theta(3);
  theta << 0.4, -0.3, 0.1;
  std::vector<int> nodes;
  Eigen::VectorXd freqs(n);
  for (int i = 0; i < n; ++i) {
    nodes.push_back(i);
    freqs[i] = unit(rng);
  }
  const double eps = 0.005;
  const TypeGeneration gen = generate_type_ratings(freqs, nodes, demo.features, theta, eps);

  CHECK(gen.coefficients.alpha < 0.0);
  // Round trip: the reporting model reproduces the clamped frequencies.
  for (int j = 0; j < n; ++j) {
    const double p = sigmoid(gen.coefficients.alpha * gen.ratings[j] +
                             gen.coefficients.theta.dot(demo.features.row(nodes[j])));
    CHECK(std::abs(p - std::clamp(freqs[j], eps, 1.0 - eps)) < 1e-9);
  }
  // Zero mean, unit sd over the pattern.
  CHECK(std::abs(gen.ratings.mean()) < 1e-9);
  const double sd = std::sqrt((gen.ratings.array() - gen.ratings.mean()).square().sum() / n);
  CHECK(std::abs(sd - 1.0) < 1e-9);
}

TEST_CASE("generation is pure: same inputs give identical outputs") {
  Eigen::MatrixXd raw(5, 1);
  raw << 1, 2, 3, 4, 5;
  const Demographics demo = normalize_demographics(raw);
  Eigen::VectorXd theta(2);
  theta << 0.3, 0.0;
  Eigen::VectorXd freqs(5);
  freqs << 0.1, 0.3, 0.5, 0.2, 0.4;
  const std::vector<int> nodes = {0, 1, 2, 3, 4};
  const auto a = generate_type_ratings(freqs, nodes, demo.features, theta, 0.01);
  const auto b = generate_type_ratings(freqs, nodes, demo.features, theta, 0.01);
  CHECK((a.ratings - b.ratings).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.coefficients.alpha == b.coefficients.alpha);
}

TEST_CASE("degenerate frequencies raise") {
  Eigen::MatrixXd raw(3, 1);
  raw << 1, 2, 3;
  const Demographics demo = normalize_demographics(raw);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd freqs(3);
  freqs << 0.2, 0.2, 0.2;  // constant -> sd(z) = 0
  CHECK_THROWS_WITH_AS(
      generate_type_ratings(freqs, {0, 1, 2}, demo.features, theta, 0.01),
      doctest::Contains("degenerate"), std::runtime_error);
}

TEST_CASE("clamp eps must sit inside (0, 0.5)") {
  CHECK(default_frequency_clamp(78) == doctest::Approx(1.0 / 156.0));
  Eigen::MatrixXd raw(2, 1);
  raw << 0, 1;
  const Demographics demo = normalize_demographics(raw);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd freqs(2);
  freqs << 0.1, 0.9;
  CHECK_THROWS(generate_type_ratings(freqs, {0, 1}, demo.features, theta, 0.0));
  CHECK_THROWS(generate_type_ratings(freqs, {0, 1}, demo.features, theta, 0.6));
}

namespace {

ObservationPanel panel_with_ratings(int count) {
  IncidentCatalog catalog;
  catalog.names = {"a", "b"};
  catalog.has_observed_ratings = {1, 1};
  catalog.agency = {"", ""};
  ObservationPanel panel = make_empty_panel(count, catalog, 3, "2022-01-03");
  for (int i = 0; i < count; ++i) {
    panel.sub_to_node[i] = i;
    panel.ratings.push_back({i, i, 0, 0, 0, static_cast<double>(i)});
    panel.ratings.push_back({i, i, 1, 1, 0, static_cast<double>(-i)});
  }
  return panel;
}

}  // namespace

TEST_CASE("subsampling is exact, per type, and deterministic") {
  const ObservationPanel panel = panel_with_ratings(100);
  const ObservationPanel all = subsample_ratings(panel, 0, 1.0, 7);
  CHECK(all.ratings.size() == panel.ratings.size());

  const ObservationPanel none = subsample_ratings(panel, 0, 0.0, 7);
  size_t type0 = 0, type1 = 0;
  for (const auto& r : none.ratings) (r.type == 0 ? type0 : type1) += 1;
  CHECK(type0 == 0);
  CHECK(type1 == 100);  // only type 0 is touched
  CHECK_FALSE(none.catalog.has_observed_ratings[0]);
  CHECK(none.catalog.has_observed_ratings[1]);

  const ObservationPanel half_a = subsample_ratings(panel, 0, 0.5, 21);
  const ObservationPanel half_b = subsample_ratings(panel, 0, 0.5, 21);
  size_t kept = 0;
  for (const auto& r : half_a.ratings) kept += r.type == 0;
  CHECK(kept == 50);
  std::set<int64_t> sa, sb;
  for (const auto& r : half_a.ratings)
    if (r.type == 0) sa.insert(r.sub_unit);
  for (const auto& r : half_b.ratings)
    if (r.type == 0) sb.insert(r.sub_unit);
  CHECK(sa == sb);
  CHECK_THROWS(subsample_ratings(panel, 0, 1.5, 0));
}

TEST_CASE("fully synthetic benchmark is well formed and well specified") {
  FullSyntheticSpec spec;
  spec.grid_rows = 6;
  spec.grid_cols = 6;
  spec.num_types = 4;
  spec.num_rated = 2;
  spec.num_weeks = 120;
  spec.seed = 13;
  const FullSyntheticData data = make_fully_synthetic(spec);
  data.panel.validate();
  CHECK(data.panel.n == 36);
  CHECK(data.panel.tau() == 4);
  CHECK(data.panel.catalog.rated_types() == std::vector<int>{0, 1});
  CHECK(data.truth.train.types.size() == 4);  // truth exists for every type

  // Reports are Bernoulli draws from the reporting model: empirical cell
  // frequencies concentrate near the model probabilities.
  const auto& block = data.truth.train;
  double worst = 0.0;
  for (size_t idx = 0; idx < block.types.size(); ++idx) {
    const int k = block.types[idx];
    for (int i = 0; i < data.panel.n; ++i) {
      const double p = sigmoid(block.alpha[idx] * block.values[idx][i] +
                               block.theta[idx].dot(data.demographics.features.row(i)));
      const double freq =
          empirical_report_frequency(data.panel, i, k, {0, spec.num_weeks});
      worst = std::max(worst, std::abs(freq - p));
    }
  }
  CHECK(worst < 0.25);  // 120 Bernoulli draws per cell

  // Determinism of the whole construction.
  const FullSyntheticData again = make_fully_synthetic(spec);
  CHECK(again.panel.node_reports == data.panel.node_reports);
  CHECK(again.truth.train.alpha == data.truth.train.alpha);
}

TEST_CASE("semi-synthetic generation regenerates per window and keeps the mask") {
  // Real-ish panel: 12 nodes, 1 rated type, reports random, ratings at fixed keys.
  IncidentCatalog catalog;
  catalog.names = {"t0"};
  catalog.has_observed_ratings = {1};
  catalog.agency = {""};
  // 2022-01-03 start; 60 weeks spans into 2023. Train Jan-Jun 2022, test Jul-Dec 2022.
  ObservationPanel panel = make_empty_panel(12, catalog, 60, "2022-01-03");
  auto rng = substream(31, "semi");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 12; ++i) {
    const double p = 0.1 + 0.06 * i;
    for (int t = 0; t < 60; ++t)
      if (unit(rng) < p) panel.set_report(i, 0, t, true);
  }
  for (int i = 0; i < 12; ++i) {
    panel.sub_to_node[i] = i;
    panel.ratings.push_back({i, i, 0, 5, 0, 99.0});   // train window key
    panel.ratings.push_back({i, i, 0, 40, 0, 99.0});  // test window key
  }
  Eigen::MatrixXd raw(12, 2);
  for (int i = 0; i < 12; ++i) {
    raw(i, 0) = unit(rng);
    raw(i, 1) = unit(rng);
  }
  const Demographics demo = normalize_demographics(raw);

  GeneratorSpec spec;
  spec.theta_mean = Eigen::VectorXd::Zero(3);
  spec.theta_mean << 0.3, -0.2, 0.0;
  spec.seed = 77;
  const WeekWindow train_weeks{0, 26};
  const WeekWindow test_weeks{26, 52};
  const SemiSyntheticResult result =
      make_semi_synthetic_panel(panel, demo, train_weeks, test_weeks, spec);
  result.panel.validate();

  REQUIRE(result.panel.ratings.size() == 24);  // the real mask is preserved
  // Every placeholder value was replaced, and train/test values differ
  // because each window calibrates against its own frequencies.
  for (const auto& r : result.panel.ratings) CHECK(r.rating != 99.0);
  std::map<int, std::pair<double, double>> by_node;
  for (const auto& r : result.panel.ratings) {
    if (r.week < 26)
      by_node[r.node].first = r.rating;
    else
      by_node[r.node].second = r.rating;
  }
  int differing = 0;
  for (const auto& [node, pair] : by_node) differing += pair.first != pair.second;
  CHECK(differing > 6);

  // Round trip within each window against that window's frequencies.
  const auto& train_block = result.truth.train;
  const double eps = default_frequency_clamp(train_weeks.size());
  for (size_t j = 0; j < train_block.pattern_nodes[0].size(); ++j) {
    const int i = train_block.pattern_nodes[0][j];
    const double freq = empirical_report_frequency(result.panel, i, 0, train_weeks);
    const double p =
        sigmoid(train_block.alpha[0] * train_block.values[0][j] +
                train_block.theta[0].dot(demo.features.row(i)));
    CHECK(std::abs(p - std::clamp(freq, eps, 1.0 - eps)) < 1e-9);
  }
}

TEST_SUITE_END();
