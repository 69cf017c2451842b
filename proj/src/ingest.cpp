#include "urban/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <set>
#include <stdexcept>

#include "urban/csv.hpp"
#include "urban/stats.hpp"

namespace urban {

namespace {

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  try {
    size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size() && std::isfinite(out);
  } catch (const std::exception&) {
    return false;
  }
}

bool parse_int(const std::string& s, int& out) {
  if (s.empty()) return false;
  try {
    size_t pos = 0;
    out = std::stoi(s, &pos);
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

bool parse_int64(const std::string& s, int64_t& out) {
  if (s.empty()) return false;
  try {
    size_t pos = 0;
    out = std::stoll(s, &pos);
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

struct ColumnIndices {
  int week = -1, type = -1, node = -1, sub = -1, lat = -1, lon = -1, rating = -1;
};

ColumnIndices resolve_columns(const CsvTable& table, const ColumnMap& m, bool need_rating) {
  ColumnIndices c;
  c.week = table.column(m.week);
  c.type = table.column(m.type);
  c.node = table.column(m.node);
  c.sub = table.column(m.sub_unit);
  c.lat = table.column(m.latitude);
  c.lon = table.column(m.longitude);
  c.rating = table.column(m.rating);
  if (c.week < 0 || c.type < 0 || c.node < 0)
    throw std::runtime_error("missing required column (week/type/node)");
  if (need_rating && c.rating < 0) throw std::runtime_error("missing rating column");
  return c;
}

void check_malformed_share(size_t malformed, size_t total, const std::string& path) {
  if (total > 0 && static_cast<double>(malformed) / total > 0.10)
    throw std::runtime_error("more than 10% malformed rows in " + path + " (" +
                             std::to_string(malformed) + "/" + std::to_string(total) + ")");
}

}  // namespace

ParseResult<RawReportRecord> parse_report_records(const std::string& path,
                                                  const ColumnMap& columns) {
  const CsvTable table = read_csv(path);
  const ColumnIndices c = resolve_columns(table, columns, false);
  ParseResult<RawReportRecord> result;
  result.total_rows = table.rows.size();
  for (const auto& row : table.rows) {
    RawReportRecord r;
    if (!parse_int(row[c.week], r.week) || !parse_int(row[c.node], r.node) ||
        row[c.type].empty()) {
      ++result.malformed_rows;
      continue;
    }
    r.type = row[c.type];
    if (c.sub >= 0 && !row[c.sub].empty()) {
      if (!parse_int64(row[c.sub], r.sub_unit)) {
        ++result.malformed_rows;
        continue;
      }
      r.has_sub_unit = true;
    }
    if (c.lat >= 0 && c.lon >= 0 && !row[c.lat].empty() && !row[c.lon].empty()) {
      if (!parse_double(row[c.lat], r.latitude) || !parse_double(row[c.lon], r.longitude)) {
        ++result.malformed_rows;
        continue;
      }
      r.has_coordinates = true;
    }
    result.records.push_back(std::move(r));
  }
  check_malformed_share(result.malformed_rows, result.total_rows, path);
  return result;
}

ParseResult<RawInspectionRecord> parse_inspection_records(const std::string& path,
                                                          const ColumnMap& columns) {
  const CsvTable table = read_csv(path);
  const ColumnIndices c = resolve_columns(table, columns, true);
  ParseResult<RawInspectionRecord> result;
  result.total_rows = table.rows.size();
  for (const auto& row : table.rows) {
    RawInspectionRecord r;
    if (!parse_int(row[c.week], r.week) || !parse_int(row[c.node], r.node) ||
        row[c.type].empty() || !parse_double(row[c.rating], r.rating)) {
      ++result.malformed_rows;
      continue;
    }
    r.type = row[c.type];
    if (c.sub >= 0 && !row[c.sub].empty() && !parse_int64(row[c.sub], r.sub_unit)) {
      ++result.malformed_rows;
      continue;
    }
    if (c.lat >= 0 && c.lon >= 0 && !row[c.lat].empty() && !row[c.lon].empty()) {
      if (!parse_double(row[c.lat], r.latitude) || !parse_double(row[c.lon], r.longitude)) {
        ++result.malformed_rows;
        continue;
      }
      r.has_coordinates = true;
    }
    result.records.push_back(std::move(r));
  }
  check_malformed_share(result.malformed_rows, result.total_rows, path);
  return result;
}

std::vector<uint8_t> build_indicators(std::span<const RawReportRecord> reports,
                                      const std::map<std::string, int>& type_ids, int n,
                                      int num_weeks) {
  const int tau = static_cast<int>(type_ids.size());
  std::vector<uint8_t> indicators(static_cast<size_t>(n) * tau * num_weeks, 0);
  for (const auto& r : reports) {
    const auto it = type_ids.find(r.type);
    if (it == type_ids.end()) continue;
    if (r.node < 0 || r.node >= n || r.week < 0 || r.week >= num_weeks) continue;
    indicators[(static_cast<size_t>(r.node) * tau + it->second) * num_weeks + r.week] = 1;
  }
  return indicators;
}

TypeFilterResult filter_types(const std::vector<uint8_t>& indicators,
                              const std::vector<std::string>& type_names, int n,
                              int num_weeks, double min_rate) {
  const int tau = static_cast<int>(type_names.size());
  const double cells = static_cast<double>(n) * num_weeks;
  TypeFilterResult result;
  for (int k = 0; k < tau; ++k) {
    long count = 0;
    for (int i = 0; i < n; ++i)
      for (int t = 0; t < num_weeks; ++t)
        count += indicators[(static_cast<size_t>(i) * tau + k) * num_weeks + t];
    if (static_cast<double>(count) / cells > min_rate) {  // strictly greater
      result.type_ids[type_names[k]] = static_cast<int>(result.kept_old_ids.size());
      result.kept_old_ids.push_back(k);
      result.catalog.names.push_back(type_names[k]);
      result.catalog.has_observed_ratings.push_back(0);
      result.catalog.agency.push_back("");
    }
  }
  if (result.kept_old_ids.empty())
    throw std::runtime_error("filter_types: every type fell below the reporting-rate floor");
  return result;
}

std::vector<double> zscore(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("zscore: need at least 2 values");
  const double m = mean(values);
  const double sd = population_sd(values);
  if (sd == 0.0) throw std::invalid_argument("zscore: constant values");
  std::vector<double> out(values.size());
  for (size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - m) / sd;
  return out;
}

void zscore_ratings(std::vector<RawInspectionRecord>& inspections) {
  std::map<std::string, std::vector<size_t>> by_type;
  for (size_t i = 0; i < inspections.size(); ++i) by_type[inspections[i].type].push_back(i);
  for (const auto& [type, indices] : by_type) {
    std::vector<double> values;
    values.reserve(indices.size());
    for (size_t i : indices) values.push_back(inspections[i].rating);
    std::vector<double> z;
    try {
      z = zscore(values);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("zscore_ratings: type '" + type + "': " + e.what());
    }
    for (size_t j = 0; j < indices.size(); ++j) inspections[indices[j]].rating = z[j];
  }
}

ResponsiveFilterResult filter_responsive_inspections(
    std::span<const RawInspectionRecord> inspections, double percentile,
    std::span<const RawReportRecord> reports) {
  ResponsiveFilterResult result;
  if (inspections.empty()) return result;

  std::map<std::pair<int, int>, int> cell_counts;  // (node, week) -> inspections
  for (const auto& r : inspections) cell_counts[{r.node, r.week}] += 1;
  std::vector<double> counts;
  counts.reserve(cell_counts.size());
  for (const auto& [cell, c] : cell_counts) counts.push_back(c);
  const double threshold = quantile(counts, percentile);
  result.stats.threshold = threshold;

  // Most recent prior report in the same (node, type), for lag statistics.
  std::map<std::pair<int, std::string>, std::vector<int>> report_weeks;
  for (const auto& r : reports) report_weeks[{r.node, r.type}].push_back(r.week);
  for (auto& [key, weeks] : report_weeks) std::sort(weeks.begin(), weeks.end());

  double kept_rating = 0.0, dropped_rating = 0.0;
  double kept_lag = 0.0, dropped_lag = 0.0;
  size_t kept_lag_n = 0, dropped_lag_n = 0;
  for (const auto& r : inspections) {
    const bool keep = cell_counts[{r.node, r.week}] >= threshold;
    double lag = -1.0;
    if (!reports.empty()) {
      const auto it = report_weeks.find({r.node, r.type});
      if (it != report_weeks.end()) {
        const auto& weeks = it->second;
        auto ub = std::upper_bound(weeks.begin(), weeks.end(), r.week);
        if (ub != weeks.begin()) lag = static_cast<double>(r.week - *std::prev(ub));
      }
    }
    if (keep) {
      result.kept.push_back(r);
      kept_rating += r.rating;
      if (lag >= 0.0) {
        kept_lag += lag;
        ++kept_lag_n;
      }
    } else {
      result.dropped.push_back(r);
      dropped_rating += r.rating;
      if (lag >= 0.0) {
        dropped_lag += lag;
        ++dropped_lag_n;
      }
    }
  }
  result.stats.kept = result.kept.size();
  result.stats.dropped = result.dropped.size();
  if (!result.kept.empty()) result.stats.kept_mean_rating = kept_rating / result.kept.size();
  if (!result.dropped.empty())
    result.stats.dropped_mean_rating = dropped_rating / result.dropped.size();
  if (kept_lag_n > 0) result.stats.kept_mean_lag_weeks = kept_lag / kept_lag_n;
  if (dropped_lag_n > 0) result.stats.dropped_mean_lag_weeks = dropped_lag / dropped_lag_n;
  result.stats.has_lag = kept_lag_n + dropped_lag_n > 0;
  return result;
}

double haversine_meters(double lat1, double lon1, double lat2, double lon2) {
  constexpr double earth_radius = 6371000.0;
  const double to_rad = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * to_rad;
  const double dlon = (lon2 - lon1) * to_rad;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * to_rad) * std::cos(lat2 * to_rad) *
                       std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * earth_radius * std::asin(std::min(1.0, std::sqrt(a)));
}

std::vector<MatchedPair> match_ratings_to_reports(
    std::span<const RawInspectionRecord> ratings, std::span<const RawReportRecord> reports,
    double threshold_meters) {
  std::vector<MatchedPair> matches;
  bool any_candidates = false;
  for (size_t ri = 0; ri < ratings.size(); ++ri) {
    const auto& rating = ratings[ri];
    if (!rating.has_coordinates) continue;
    double best = std::numeric_limits<double>::infinity();
    size_t best_idx = 0;
    bool found = false;
    for (size_t pi = 0; pi < reports.size(); ++pi) {
      const auto& report = reports[pi];
      if (!report.has_coordinates || report.type != rating.type) continue;
      any_candidates = true;
      const double d = haversine_meters(rating.latitude, rating.longitude, report.latitude,
                                        report.longitude);
      if (d < best) {  // strict: distance ties keep the lowest report index
        best = d;
        best_idx = pi;
        found = true;
      }
    }
    if (found && best <= threshold_meters)
      matches.push_back(MatchedPair{ri, best_idx, best});
  }
  if (!ratings.empty() && !any_candidates)
    std::cerr << "match_ratings_to_reports: no candidate reports; all ratings discarded\n";
  return matches;
}

ObservationPanel assemble_panel(std::vector<RawReportRecord> reports,
                                std::vector<RawInspectionRecord> inspections, int n,
                                int num_weeks, const std::string& start_date,
                                const IngestOptions& options) {
  // Type universe from the reports, in sorted-name order.
  std::set<std::string> name_set;
  for (const auto& r : reports) name_set.insert(r.type);
  std::vector<std::string> all_names(name_set.begin(), name_set.end());
  std::map<std::string, int> all_ids;
  for (size_t k = 0; k < all_names.size(); ++k) all_ids[all_names[k]] = static_cast<int>(k);

  const auto raw_indicators = build_indicators(reports, all_ids, n, num_weeks);
  TypeFilterResult kept =
      filter_types(raw_indicators, all_names, n, num_weeks, options.min_type_rate);

  ObservationPanel panel = make_empty_panel(n, kept.catalog, num_weeks, start_date);
  const auto indicators = build_indicators(reports, kept.type_ids, n, num_weeks);
  panel.node_reports = indicators;

  // Responsive-inspection filtering applies only to the configured types
  // (block-by-block inspections mixed with report-triggered ones).
  std::vector<RawInspectionRecord> surviving;
  for (const auto& type : kept.catalog.names) {
    std::vector<RawInspectionRecord> of_type;
    for (const auto& insp : inspections)
      if (insp.type == type) of_type.push_back(insp);
    if (of_type.empty()) continue;
    const bool needs_filter =
        std::find(options.responsive_filter_types.begin(),
                  options.responsive_filter_types.end(),
                  type) != options.responsive_filter_types.end();
    if (needs_filter) {
      auto filtered =
          filter_responsive_inspections(of_type, options.responsive_percentile, reports);
      of_type = std::move(filtered.kept);
    }
    surviving.insert(surviving.end(), of_type.begin(), of_type.end());
  }

  // Sub-unit resolution per type, then z-scoring on what survives.
  std::vector<RawInspectionRecord> final_inspections;
  for (const auto& [name, new_id] : kept.type_ids) {
    std::vector<RawInspectionRecord> of_type;
    for (const auto& insp : surviving)
      if (insp.type == name) of_type.push_back(insp);
    if (of_type.empty()) continue;

    MatchMode mode = MatchMode::Direct;
    if (const auto it = options.rating_match_modes.find(name);
        it != options.rating_match_modes.end())
      mode = it->second;

    if (mode == MatchMode::Coordinates) {
      std::vector<RawReportRecord> type_reports;
      for (const auto& r : reports)
        if (r.type == name && r.has_coordinates) type_reports.push_back(r);
      const auto matches =
          match_ratings_to_reports(of_type, type_reports, options.match_threshold_meters);
      std::vector<RawInspectionRecord> matched;
      for (const auto& m : matches) {
        RawInspectionRecord insp = of_type[m.rating_index];
        // The rated sub-unit's weekly reports: every report of this type
        // within the distance threshold of the rating's location.
        for (const auto& rep : type_reports) {
          if (haversine_meters(insp.latitude, insp.longitude, rep.latitude, rep.longitude) <=
              options.match_threshold_meters) {
            auto& weeks = panel.sub_report_weeks[{insp.sub_unit, new_id}];
            weeks.push_back(rep.week);
          }
        }
        matched.push_back(insp);
      }
      of_type = std::move(matched);
    } else {
      // Direct match: reports carry the same sub-unit key.
      for (const auto& insp : of_type) {
        for (const auto& rep : reports) {
          if (rep.type == name && rep.has_sub_unit && rep.sub_unit == insp.sub_unit)
            panel.sub_report_weeks[{insp.sub_unit, new_id}].push_back(rep.week);
        }
      }
    }
    final_inspections.insert(final_inspections.end(), of_type.begin(), of_type.end());
  }

  for (auto& [key, weeks] : panel.sub_report_weeks) {
    std::sort(weeks.begin(), weeks.end());
    weeks.erase(std::unique(weeks.begin(), weeks.end()), weeks.end());
  }

  zscore_ratings(final_inspections);

  for (const auto& insp : final_inspections) {
    if (insp.node < 0 || insp.node >= n || insp.week < 0 || insp.week >= num_weeks) continue;
    const int k = kept.type_ids.at(insp.type);
    RatingObs obs;
    obs.sub_unit = insp.sub_unit;
    obs.node = insp.node;
    obs.type = k;
    obs.week = insp.week;
    obs.rating = insp.rating;
    obs.report = panel.sub_report(insp.sub_unit, k, insp.week) ? 1 : 0;
    panel.sub_to_node[insp.sub_unit] = insp.node;
    panel.ratings.push_back(obs);
    panel.catalog.has_observed_ratings[k] = 1;
  }
  // Drop sub-report series whose pair never produced a surviving rating.
  for (auto it = panel.sub_report_weeks.begin(); it != panel.sub_report_weeks.end();) {
    bool found = false;
    for (const auto& r : panel.ratings)
      if (r.sub_unit == it->first.first && r.type == it->first.second) {
        found = true;
        break;
      }
    it = found ? std::next(it) : panel.sub_report_weeks.erase(it);
  }

  if (options.carry_forward) return carry_forward_ratings(panel);
  return panel;
}

}  // namespace urban
