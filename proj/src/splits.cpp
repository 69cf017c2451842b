#include "urban/splits.hpp"

#include <iostream>
#include <stdexcept>

namespace urban {

int month_index(int year, int month) {
  if (month < 1 || month > 12) throw std::invalid_argument("month outside 1..12");
  return year * 12 + (month - 1);
}

int month_index(const std::string& iso_month) {
  if (iso_month.size() < 7 || iso_month[4] != '-')
    throw std::invalid_argument("expected YYYY-MM, got '" + iso_month + "'");
  const int year = std::stoi(iso_month.substr(0, 4));
  const int month = std::stoi(iso_month.substr(5, 2));
  return month_index(year, month);
}

std::string month_label(int month_idx) {
  const int year = month_idx / 12;
  const int month = month_idx % 12 + 1;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
  return buf;
}

// Howard Hinnant's civil-date algorithm.
long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

long parse_iso_date(const std::string& iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
    throw std::invalid_argument("expected YYYY-MM-DD, got '" + iso + "'");
  return days_from_civil(std::stoi(iso.substr(0, 4)), std::stoi(iso.substr(5, 2)),
                         std::stoi(iso.substr(8, 2)));
}

int month_of_day(long day_number) {
  // Invert days_from_civil.
  long z = day_number + 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long y = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return month_index(static_cast<int>(y + (m <= 2)), static_cast<int>(m));
}

std::vector<SplitSpec> make_time_splits(int panel_start_month, int panel_end_month,
                                        int window_months, int train_months,
                                        int stride_months, int validation_months) {
  if (train_months >= window_months)
    throw std::invalid_argument("make_time_splits: train window must leave room for test");
  if (stride_months < 1) throw std::invalid_argument("make_time_splits: stride must be >= 1");
  const int span = panel_end_month - panel_start_month;
  std::vector<SplitSpec> splits;
  if (span < window_months) {
    std::cerr << "make_time_splits: panel span " << span << " months is shorter than the "
              << window_months << "-month window; no splits produced\n";
    return splits;
  }
  for (int start = panel_start_month; start + window_months <= panel_end_month;
       start += stride_months) {
    SplitSpec s;
    s.train_start = start;
    s.train_end = start + train_months;
    s.test_start = s.train_end;
    s.test_end = start + window_months;
    s.val_end = s.train_end;
    s.val_start = s.train_end - std::min(validation_months, train_months);
    if (validation_months <= 0) s.val_start = s.val_end;
    splits.push_back(s);
  }
  return splits;
}

WeekWindow weeks_in_months(long panel_start_day, int num_weeks, int month_start,
                           int month_end) {
  WeekWindow w{num_weeks, num_weeks};
  bool found = false;
  for (int t = 0; t < num_weeks; ++t) {
    const int m = month_of_day(panel_start_day + 7L * t);
    if (m >= month_start && m < month_end) {
      if (!found) {
        w.begin = t;
        found = true;
      }
      w.end = t + 1;
    } else if (found) {
      break;  // weeks are chronological; the window is contiguous
    }
  }
  if (!found) w = WeekWindow{0, 0};
  return w;
}

}  // namespace urban
