#include <doctest.h>

#include <filesystem>
#include <random>

#include "urban/panel.hpp"
#include "urban/panel_io.hpp"

using namespace urban;

namespace {

IncidentCatalog tiny_catalog(int tau, int rated) {
  IncidentCatalog c;
  for (int k = 0; k < tau; ++k) {
    c.names.push_back("t" + std::to_string(k));
    c.has_observed_ratings.push_back(k < rated ? 1 : 0);
    c.agency.push_back("");
  }
  return c;
}

}  // namespace

TEST_SUITE_BEGIN("panel");

TEST_CASE("empirical report frequency is the window mean") {
  ObservationPanel p = make_empty_panel(1, tiny_catalog(1, 0), 4, "2022-01-03");
  p.set_report(0, 0, 0, true);
  p.set_report(0, 0, 2, true);
  CHECK(empirical_report_frequency(p, 0, 0, {0, 4}) == doctest::Approx(0.5));

  ObservationPanel zeros = make_empty_panel(1, tiny_catalog(1, 0), 3, "2022-01-03");
  CHECK(empirical_report_frequency(zeros, 0, 0, {0, 3}) == 0.0);

  ObservationPanel ones = make_empty_panel(1, tiny_catalog(1, 0), 3, "2022-01-03");
  for (int t = 0; t < 3; ++t) ones.set_report(0, 0, t, true);
  CHECK(empirical_report_frequency(ones, 0, 0, {0, 3}) == 1.0);
}

TEST_CASE("frequency equals brute force on random instances") {
  std::mt19937_64 rng(7);
  ObservationPanel p = make_empty_panel(3, tiny_catalog(2, 0), 20, "2022-01-03");
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 2; ++k)
      for (int t = 0; t < 20; ++t) p.set_report(i, k, t, rng() % 3 == 0);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 2; ++k) {
      double sum = 0;
      for (int t = 4; t < 17; ++t) sum += p.report(i, k, t);
      CHECK(empirical_report_frequency(p, i, k, {4, 17}) == sum / 13.0);
    }
}

TEST_CASE("carry forward fills until the next inspection") {
  ObservationPanel p = make_empty_panel(1, tiny_catalog(1, 1), 10, "2022-01-03");
  p.sub_to_node[42] = 0;
  p.ratings.push_back({42, 0, 0, 3, 0, 1.5});
  const ObservationPanel filled = carry_forward_ratings(p);
  REQUIRE(filled.ratings.size() == 7);  // weeks 3..9
  for (const auto& r : filled.ratings) {
    CHECK(r.week >= 3);
    CHECK(r.rating == 1.5);
  }
}

TEST_CASE("carry forward with two inspections") {
  ObservationPanel p = make_empty_panel(1, tiny_catalog(1, 1), 10, "2022-01-03");
  p.sub_to_node[7] = 0;
  p.ratings.push_back({7, 0, 0, 2, 0, -1.0});  // value a
  p.ratings.push_back({7, 0, 0, 5, 0, 2.0});   // value b
  const ObservationPanel filled = carry_forward_ratings(p);
  REQUIRE(filled.ratings.size() == 8);  // weeks 2..9
  for (const auto& r : filled.ratings) {
    if (r.week < 5)
      CHECK(r.rating == -1.0);
    else
      CHECK(r.rating == 2.0);
  }
}

TEST_CASE("carry forward without inspections leaves nothing") {
  ObservationPanel p = make_empty_panel(2, tiny_catalog(1, 0), 6, "2022-01-03");
  CHECK(carry_forward_ratings(p).ratings.empty());
}

TEST_CASE("carry forward never overwrites an observed week") {
  std::mt19937_64 rng(11);
  ObservationPanel p = make_empty_panel(1, tiny_catalog(1, 1), 30, "2022-01-03");
  p.sub_to_node[1] = 0;
  std::vector<double> by_week(30, std::numeric_limits<double>::quiet_NaN());
  for (int j = 0; j < 6; ++j) {
    const int week = static_cast<int>(rng() % 30);
    const double value = static_cast<double>(j);
    if (!std::isnan(by_week[week])) continue;
    by_week[week] = value;
    p.ratings.push_back({1, 0, 0, week, 0, value});
  }
  const ObservationPanel filled = carry_forward_ratings(p);
  for (const auto& r : filled.ratings) {
    if (!std::isnan(by_week[r.week]))
      CHECK(r.rating == by_week[r.week]);  // original observations intact
  }
  // Brute-force trace: value at week t is the most recent observation at or before t.
  double current = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> expected(30, std::numeric_limits<double>::quiet_NaN());
  for (int t = 0; t < 30; ++t) {
    if (!std::isnan(by_week[t])) current = by_week[t];
    expected[t] = current;
  }
  for (const auto& r : filled.ratings) CHECK(r.rating == expected[r.week]);
}

TEST_CASE("carry forward picks up sub-unit report weeks") {
  ObservationPanel p = make_empty_panel(1, tiny_catalog(1, 1), 6, "2022-01-03");
  p.sub_to_node[5] = 0;
  p.sub_report_weeks[{5, 0}] = {2, 4};
  p.ratings.push_back({5, 0, 0, 1, 0, 0.5});
  const ObservationPanel filled = carry_forward_ratings(p);
  for (const auto& r : filled.ratings)
    CHECK(int(r.report) == ((r.week == 2 || r.week == 4) ? 1 : 0));
}

TEST_CASE("validate rejects inconsistent panels") {
  ObservationPanel p = make_empty_panel(2, tiny_catalog(2, 1), 4, "2022-01-03");
  p.validate();
  SUBCASE("rating for unmapped sub-unit") {
    p.ratings.push_back({9, 1, 0, 0, 0, 0.0});
    CHECK_THROWS(p.validate());
  }
  SUBCASE("rating outside node range") {
    p.sub_to_node[9] = 5;
    p.ratings.push_back({9, 5, 0, 0, 0, 0.0});
    CHECK_THROWS(p.validate());
  }
  SUBCASE("rating for an unrated type") {
    p.sub_to_node[9] = 1;
    p.ratings.push_back({9, 1, 1, 0, 0, 0.0});
    CHECK_THROWS(p.validate());
  }
}

TEST_CASE("panel round trips through csv + json") {
  ObservationPanel p = make_empty_panel(3, tiny_catalog(2, 1), 5, "2022-01-03");
  p.set_report(0, 0, 1, true);
  p.set_report(2, 1, 4, true);
  p.sub_to_node[100] = 0;
  p.sub_report_weeks[{100, 0}] = {1, 3};
  p.ratings.push_back({100, 0, 0, 1, 1, -0.75});
  p.validate();

  const auto dir = std::filesystem::temp_directory_path() / "urban_panel_test";
  std::filesystem::create_directories(dir);
  const std::string csv = (dir / "panel.csv").string();
  const std::string json = (dir / "panel.json").string();
  save_panel(p, csv, json);
  const ObservationPanel q = load_panel(csv, json);
  CHECK(q.n == p.n);
  CHECK(q.tau() == p.tau());
  CHECK(q.num_weeks == p.num_weeks);
  CHECK(q.start_date == p.start_date);
  CHECK(q.node_reports == p.node_reports);
  REQUIRE(q.ratings.size() == 1);
  CHECK(q.ratings[0].rating == -0.75);
  CHECK(q.ratings[0].report == 1);
  CHECK(q.sub_report_weeks.at({100, 0}) == std::vector<int>{1, 3});
  q.validate();
}

TEST_SUITE_END();
