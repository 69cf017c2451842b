#include <doctest.h>

#include <cmath>
#include <random>

#include "urban/objective.hpp"
#include "urban/rng.hpp"

using namespace urban;

TEST_SUITE_BEGIN("objective");

TEST_CASE("bce terms") {
  CHECK(bce_term(1.0, 1) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(bce_term(0.5, 1) == doctest::Approx(0.6931).epsilon(1e-4));
  CHECK(bce_term(0.5, 0) == doctest::Approx(0.6931).epsilon(1e-4));
  CHECK(bce_term(0.0, 0) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(std::isfinite(bce_term(0.0, 1)));  // clamped away from infinity
  CHECK_THROWS(bce_term(std::numeric_limits<double>::quiet_NaN(), 1));
}

TEST_CASE("unobserved batch components") {
  BatchRows batch;
  batch.observed = false;
  batch.node = {0, 1};
  batch.type = {0, 0};
  batch.week = {0, 0};
  batch.label = {1, 0};
  RowPredictions pred;
  pred.probability = Eigen::VectorXd(2);
  pred.probability << 0.5, 0.5;
  pred.rating = Eigen::VectorXd(2);
  pred.rating << 1.0, -2.0;
  const LossComponents c = loss_components(batch, pred);
  CHECK(c.unobs == doctest::Approx(2 * 0.6931).epsilon(1e-4));
  CHECK(c.reg == doctest::Approx(5.0));  // 1^2 + (-2)^2
  CHECK(c.obs == 0.0);
  CHECK(c.rating == 0.0);
}

TEST_CASE("observed batch components") {
  BatchRows batch;
  batch.observed = true;
  batch.node = {0, 1};
  batch.type = {0, 0};
  batch.week = {0, 0};
  batch.label = {1, 1};
  batch.rating = {0.5, -0.5};
  RowPredictions pred;
  pred.probability = Eigen::VectorXd(2);
  pred.probability << 1.0, 1.0;
  pred.rating = Eigen::VectorXd(2);
  pred.rating << 0.5, -0.5;
  const LossComponents c = loss_components(batch, pred);
  CHECK(c.obs == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(c.rating == 0.0);  // exact fit
  CHECK(c.unobs == 0.0);
  CHECK(c.reg == 0.0);
}

TEST_CASE("parameter penalties read the head for the subsampled type") {
  ReportingHead head;
  head.alpha = Eigen::VectorXd(2);
  head.alpha << -0.5, 0.3;
  head.theta = Eigen::MatrixXd(2, 3);
  head.theta << 1, 2, 9, 3, 4, 9;  // intercept column last, excluded
  head.rated = {1, 1};
  BatchRows batch;
  batch.observed = false;
  RowPredictions pred;
  pred.rating = Eigen::VectorXd(0);
  pred.probability = Eigen::VectorXd(0);

  const LossComponents c0 = loss_components(batch, pred, &head, 0);
  CHECK(c0.theta_reg == doctest::Approx(1 + 4));
  CHECK(c0.alpha_relu == 0.0);  // relu of a negative alpha
  const LossComponents c1 = loss_components(batch, pred, &head, 1);
  CHECK(c1.theta_reg == doctest::Approx(9 + 16));
  CHECK(c1.alpha_relu == doctest::Approx(0.3));
  const LossComponents none = loss_components(batch, pred, &head, -1);
  CHECK(none.theta_reg == 0.0);
  CHECK(none.alpha_relu == 0.0);
}

TEST_CASE("total loss is the weighted sum with unit unobserved weight") {
  LossComponents c{1, 1, 1, 1, 0, 0};
  LossWeights w{20, 1, 1e-6, 0, 0};
  CHECK(total_loss(c, w) == doctest::Approx(22.0 + 1e-6));
  LossWeights zero{0, 0, 0, 0, 0};
  CHECK(total_loss(c, zero) == doctest::Approx(c.unobs));
  CHECK(total_loss(LossComponents{}, w) == 0.0);
  // Linearity in each component.
  LossComponents c2 = c;
  c2.rating = 5;
  CHECK(total_loss(c2, w) - total_loss(c, w) == doctest::Approx(4.0 * w.rating_mse));
}

TEST_CASE("named variants carry the right weights and policies") {
  const VariantConfig full = variant_config("full");
  CHECK(full.weights.observed_bce == 20.0);
  CHECK(full.weights.rating_mse == 1.0);
  CHECK(full.weights.rating_reg == 1e-6);
  CHECK(full.weights.theta_reg == 0.0);
  CHECK(full.weights.alpha_relu == 0.0);
  CHECK(full.unobs_weight == 1.0);
  CHECK(full.head_policy == HeadLearning::RatedTypesObservedRows);
  CHECK(full.unobserved_head_gradient == 0.0);

  const VariantConfig reports = variant_config("reports_only");
  CHECK(reports.weights.rating_mse == 0.0);
  CHECK(reports.head_policy == HeadLearning::AllTypesAllRows);
  CHECK(reports.unobserved_head_gradient == 1.0);

  const VariantConfig ratings = variant_config("ratings_only");
  CHECK(ratings.unobs_weight == 0.0);
  CHECK(ratings.weights.observed_bce == 0.0);
  CHECK(ratings.weights.rating_mse == 1.0);
  CHECK(ratings.weights.rating_reg == 1e-6);
  CHECK(ratings.head_policy == HeadLearning::Unused);

  const VariantConfig synth = variant_config("subsampled_full_synth");
  CHECK(synth.weights.rating_mse == 10.0);
  CHECK(synth.weights.theta_reg == 0.0);
  CHECK(synth.unobserved_head_gradient == 0.0);

  const VariantConfig real = variant_config("subsampled_full_real");
  CHECK(real.weights.theta_reg == 0.1);
  CHECK(real.weights.alpha_relu == 0.1);
  CHECK(real.unobserved_head_gradient == 0.6);

  CHECK_THROWS(variant_config("bogus"));
}

TEST_CASE("components are nonnegative and match a row-by-row recount") {
  auto rng = substream(2, "objective");
  std::uniform_real_distribution<double> unit(0.01, 0.99);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    BatchRows batch;
    batch.observed = trial % 2 == 0;
    const int rows = 1 + static_cast<int>(rng() % 17);
    RowPredictions pred;
    pred.probability = Eigen::VectorXd(rows);
    pred.rating = Eigen::VectorXd(rows);
    for (int j = 0; j < rows; ++j) {
      batch.node.push_back(j % 3);
      batch.type.push_back(0);
      batch.week.push_back(j);
      batch.label.push_back(rng() % 2);
      if (batch.observed) batch.rating.push_back(gauss(rng));
      pred.probability[j] = unit(rng);
      pred.rating[j] = gauss(rng);
    }
    const LossComponents c = loss_components(batch, pred);
    CHECK(c.unobs >= 0.0);
    CHECK(c.obs >= 0.0);
    CHECK(c.rating >= 0.0);
    CHECK(c.reg >= 0.0);
    // Independent recount, one row at a time.
    double unobs = 0, obs = 0, rating = 0, reg = 0;
    for (int j = 0; j < rows; ++j) {
      const double p = std::clamp(pred.probability[j], 1e-7, 1 - 1e-7);
      const double bce = batch.label[j] ? -std::log(p) : -std::log(1 - p);
      if (batch.observed) {
        obs += bce;
        rating += (pred.rating[j] - batch.rating[j]) * (pred.rating[j] - batch.rating[j]);
      } else {
        unobs += bce;
        reg += pred.rating[j] * pred.rating[j];
      }
    }
    CHECK(c.unobs == doctest::Approx(unobs).epsilon(1e-10));
    CHECK(c.obs == doctest::Approx(obs).epsilon(1e-10));
    CHECK(c.rating == doctest::Approx(rating).epsilon(1e-10));
    CHECK(c.reg == doctest::Approx(reg).epsilon(1e-10));
  }
}

TEST_SUITE_END();
