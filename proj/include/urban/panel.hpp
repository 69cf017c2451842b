#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "urban/splits.hpp"

namespace urban {

struct IncidentCatalog {
  std::vector<std::string> names;
  std::vector<uint8_t> has_observed_ratings;
  std::vector<std::string> agency;  // source agency tag, may be empty

  int tau() const { return static_cast<int>(names.size()); }
  std::vector<int> rated_types() const;
};

/// One rating observation at a fine-grained unit inside a node, together with
/// the report indicator for that unit/type/week.
struct RatingObs {
  int64_t sub_unit = 0;
  int node = 0;
  int type = 0;
  int week = 0;
  uint8_t report = 0;
  double rating = 0.0;
};

/// The panel holds node-level report indicators densely (implicitly 0), plus
/// rating observations keyed at the sub-node level and the weeks in which each
/// rated sub-unit received reports (needed when ratings are carried forward).
struct ObservationPanel {
  int n = 0;
  int num_weeks = 0;
  std::string start_date;  // ISO date of week 0's first day
  IncidentCatalog catalog;
  std::vector<uint8_t> node_reports;  // n * tau * num_weeks, row-major (i, k, t)
  std::vector<RatingObs> ratings;
  std::unordered_map<int64_t, int> sub_to_node;
  std::map<std::pair<int64_t, int>, std::vector<int>> sub_report_weeks;  // (sub, type) -> sorted weeks

  int tau() const { return catalog.tau(); }
  long start_day() const { return parse_iso_date(start_date); }

  size_t cell_index(int i, int k, int t) const {
    return (static_cast<size_t>(i) * tau() + k) * num_weeks + t;
  }
  uint8_t report(int i, int k, int t) const { return node_reports[cell_index(i, k, t)]; }
  void set_report(int i, int k, int t, bool value) {
    node_reports[cell_index(i, k, t)] = value ? 1 : 0;
  }
  bool sub_report(int64_t sub, int type, int week) const;

  /// (i, k, t) cells covered by at least one rating observation, as a dense
  /// mask over the same layout as node_reports.
  std::vector<uint8_t> rated_cell_mask() const;
  /// Types with at least one rating inside the window (all weeks if empty).
  std::vector<uint8_t> rated_type_mask(const WeekWindow& window) const;

  /// Checks structural invariants; throws on violation.
  void validate() const;
};

ObservationPanel make_empty_panel(int n, IncidentCatalog catalog, int num_weeks,
                                  std::string start_date);

/// Mean of the node-level indicator over a week window.
double empirical_report_frequency(const ObservationPanel& panel, int node, int type,
                                  const WeekWindow& window);

/// Propagates each rating forward in time: within a (sub-unit, type) series a
/// rating holds from its inspection week until the week before the next
/// inspection (or the end of the panel). Existing observations are never
/// overwritten. Report indicators for filled weeks come from the sub-unit's
/// recorded report weeks.
ObservationPanel carry_forward_ratings(const ObservationPanel& panel);

}  // namespace urban
