#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "urban/panel.hpp"

namespace urban {

struct RawReportRecord {
  int week = 0;
  std::string type;
  int node = 0;
  int64_t sub_unit = 0;
  bool has_sub_unit = false;
  double latitude = 0.0;
  double longitude = 0.0;
  bool has_coordinates = false;
};

struct RawInspectionRecord {
  int week = 0;
  std::string type;
  int node = 0;
  int64_t sub_unit = 0;
  double rating = 0.0;
  double latitude = 0.0;
  double longitude = 0.0;
  bool has_coordinates = false;
};

/// Maps logical fields to CSV column names, so exports with different layouts
/// can be consumed without reshaping.
struct ColumnMap {
  std::string week = "week";
  std::string type = "type";
  std::string node = "node";
  std::string sub_unit = "sub_unit";
  std::string latitude = "latitude";
  std::string longitude = "longitude";
  std::string rating = "rating";
};

template <typename Record>
struct ParseResult {
  std::vector<Record> records;
  size_t malformed_rows = 0;
  size_t total_rows = 0;
};

/// Parses a report export. Malformed rows are skipped and counted; more than
/// 10% malformed is treated as a broken export and raises.
ParseResult<RawReportRecord> parse_report_records(const std::string& path,
                                                  const ColumnMap& columns = {});
ParseResult<RawInspectionRecord> parse_inspection_records(const std::string& path,
                                                          const ColumnMap& columns = {});

/// Node-level indicators: 1 iff at least one report of the type landed in the
/// node during the week. Type ids come from `type_ids`; unknown types are
/// ignored.
std::vector<uint8_t> build_indicators(std::span<const RawReportRecord> reports,
                                      const std::map<std::string, int>& type_ids, int n,
                                      int num_weeks);

/// Keeps types whose indicator rate over all (node, week) cells is strictly
/// above `min_rate`. Returns the catalog of kept types (old id -> new id via
/// the second member). Throws if nothing survives.
struct TypeFilterResult {
  IncidentCatalog catalog;
  std::map<std::string, int> type_ids;  // name -> new id
  std::vector<int> kept_old_ids;
};
TypeFilterResult filter_types(const std::vector<uint8_t>& indicators,
                              const std::vector<std::string>& type_names, int n,
                              int num_weeks, double min_rate = 0.001);

/// Per-type rating z-scoring (population sd). Throws on fewer than two values
/// or a constant series.
std::vector<double> zscore(std::span<const double> values);
void zscore_ratings(std::vector<RawInspectionRecord>& inspections);

struct ResponsiveFilterStats {
  size_t kept = 0;
  size_t dropped = 0;
  double threshold = 0.0;
  double kept_mean_rating = 0.0;
  double dropped_mean_rating = 0.0;
  double kept_mean_lag_weeks = 0.0;    // report-to-inspection lag, when reports given
  double dropped_mean_lag_weeks = 0.0;
  bool has_lag = false;
};

/// Separates proactive (block-by-block) inspections from report-triggered
/// ones: counts inspections per (node, week) and keeps those in cells at or
/// above the given percentile of the count distribution. Lag statistics are
/// filled when report records are supplied.
struct ResponsiveFilterResult {
  std::vector<RawInspectionRecord> kept;
  std::vector<RawInspectionRecord> dropped;
  ResponsiveFilterStats stats;
};
ResponsiveFilterResult filter_responsive_inspections(
    std::span<const RawInspectionRecord> inspections, double percentile = 0.5,
    std::span<const RawReportRecord> reports = {});

/// Great-circle distance in meters.
double haversine_meters(double lat1, double lon1, double lat2, double lon2);

struct MatchedPair {
  size_t rating_index = 0;
  size_t report_index = 0;
  double distance_meters = 0.0;
};

/// Pairs each rating with its nearest report of the same type (haversine);
/// ratings whose nearest report is farther than the threshold are discarded.
/// Distance ties break toward the lowest report index.
std::vector<MatchedPair> match_ratings_to_reports(
    std::span<const RawInspectionRecord> ratings, std::span<const RawReportRecord> reports,
    double threshold_meters);

/// How sub-units are resolved for a rated type.
enum class MatchMode { Direct, Coordinates };

struct IngestOptions {
  double min_type_rate = 0.001;
  double match_threshold_meters = 100.0;
  double responsive_percentile = 0.5;
  std::vector<std::string> responsive_filter_types;       // e.g. the rodent export
  std::map<std::string, MatchMode> rating_match_modes;    // default Direct
  bool carry_forward = true;
};

/// Full raw-exports -> panel pipeline.
ObservationPanel assemble_panel(std::vector<RawReportRecord> reports,
                                std::vector<RawInspectionRecord> inspections, int n,
                                int num_weeks, const std::string& start_date,
                                const IngestOptions& options);

}  // namespace urban
