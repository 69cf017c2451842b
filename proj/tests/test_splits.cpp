#include <doctest.h>

#include <set>

#include "urban/splits.hpp"

using namespace urban;

TEST_SUITE_BEGIN("splits");

TEST_CASE("three years of monthly strides yield 13 windows") {
  const auto splits = make_time_splits(month_index(2021, 1), month_index(2024, 1));
  REQUIRE(splits.size() == 13);
  // First window: train Jan 2021 - Jun 2022, test Jul 2022 - Dec 2022.
  CHECK(splits[0].train_start == month_index(2021, 1));
  CHECK(splits[0].train_end == month_index(2022, 7));
  CHECK(splits[0].test_start == month_index(2022, 7));
  CHECK(splits[0].test_end == month_index(2023, 1));
  // Last window ends with the panel.
  CHECK(splits.back().test_end == month_index(2024, 1));
}

TEST_CASE("every window has 18 train and 6 test months and windows are distinct") {
  const auto splits = make_time_splits(month_index(2021, 1), month_index(2024, 1));
  std::set<int> starts;
  for (const auto& s : splits) {
    CHECK(s.train_end - s.train_start == 18);
    CHECK(s.test_end - s.test_start == 6);
    CHECK(s.train_end == s.test_start);
    starts.insert(s.train_start);
  }
  CHECK(starts.size() == splits.size());
}

TEST_CASE("exactly one window when span equals window") {
  const auto splits = make_time_splits(month_index(2022, 1), month_index(2024, 1));
  CHECK(splits.size() == 1);
}

TEST_CASE("span shorter than window yields empty list") {
  const auto splits = make_time_splits(month_index(2023, 1), month_index(2024, 1));
  CHECK(splits.empty());
}

TEST_CASE("validation window carves the train tail") {
  const auto splits =
      make_time_splits(month_index(2021, 1), month_index(2024, 1), 24, 18, 1, 3);
  CHECK(splits[0].has_validation());
  CHECK(splits[0].val_end == splits[0].train_end);
  CHECK(splits[0].val_end - splits[0].val_start == 3);
  CHECK(splits[0].effective_train_end() == splits[0].train_end - 3);
}

TEST_CASE("week windows respect month boundaries by start day") {
  // Weeks starting Mondays from 2022-01-03.
  const long day0 = parse_iso_date("2022-01-03");
  const WeekWindow jan = weeks_in_months(day0, 10, month_index(2022, 1), month_index(2022, 2));
  // Weeks 0..3 start in January (Jan 3, 10, 17, 24, 31 -> 5 weeks).
  CHECK(jan.begin == 0);
  CHECK(jan.end == 5);
  const WeekWindow feb = weeks_in_months(day0, 10, month_index(2022, 2), month_index(2022, 3));
  CHECK(feb.begin == 5);
  CHECK(feb.end == 9);
  const WeekWindow none = weeks_in_months(day0, 10, month_index(2021, 1), month_index(2021, 2));
  CHECK(none.empty());
}

TEST_CASE("date helpers round trip") {
  CHECK(parse_iso_date("1970-01-01") == 0);
  CHECK(parse_iso_date("1970-02-01") == 31);
  CHECK(month_of_day(parse_iso_date("2023-12-31")) == month_index(2023, 12));
  CHECK(month_of_day(parse_iso_date("2024-01-01")) == month_index(2024, 1));
  CHECK(month_label(month_index(2021, 7)) == "2021-07");
}

TEST_SUITE_END();
