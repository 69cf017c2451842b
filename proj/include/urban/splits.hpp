#pragma once

#include <string>
#include <vector>

namespace urban {

/// Months are counted as year*12 + (month-1) so window arithmetic is plain
/// integer math. Ranges are half-open [start, end).
int month_index(int year, int month);
int month_index(const std::string& iso_month);  // "YYYY-MM" or "YYYY-MM-DD"
std::string month_label(int month_idx);         // "YYYY-MM"

/// Days since 1970-01-01 for a civil date.
long days_from_civil(int year, int month, int day);
long parse_iso_date(const std::string& iso);  // "YYYY-MM-DD" -> day number
int month_of_day(long day_number);            // month index containing the day

struct SplitSpec {
  int train_start = 0;  // month indices, half-open windows
  int train_end = 0;
  int test_start = 0;
  int test_end = 0;
  int val_start = 0;  // validation ⊂ train tail; val_start == val_end when absent
  int val_end = 0;

  bool has_validation() const { return val_end > val_start; }
  /// Train months actually used for fitting once validation is carved out.
  int effective_train_end() const { return has_validation() ? val_start : train_end; }
};

/// Rolling windows over [panel_start, panel_end): one split per window
/// position, train months followed by test months, stepping by `stride`.
/// A span shorter than the window yields an empty list (with a warning).
std::vector<SplitSpec> make_time_splits(int panel_start_month, int panel_end_month,
                                        int window_months = 24, int train_months = 18,
                                        int stride_months = 1, int validation_months = 0);

struct WeekWindow {
  int begin = 0;  // half-open week-index range
  int end = 0;
  bool empty() const { return end <= begin; }
  int size() const { return end - begin; }
};

/// Weeks (by start day) falling inside a month window. `panel_start_day` is
/// the day number of week 0's first day.
WeekWindow weeks_in_months(long panel_start_day, int num_weeks, int month_start,
                           int month_end);

}  // namespace urban
