#include "urban/panel.hpp"

#include <algorithm>
#include <stdexcept>

namespace urban {

std::vector<int> IncidentCatalog::rated_types() const {
  std::vector<int> out;
  for (int k = 0; k < tau(); ++k)
    if (has_observed_ratings[k]) out.push_back(k);
  return out;
}

bool ObservationPanel::sub_report(int64_t sub, int type, int week) const {
  const auto it = sub_report_weeks.find({sub, type});
  if (it == sub_report_weeks.end()) return false;
  return std::binary_search(it->second.begin(), it->second.end(), week);
}

std::vector<uint8_t> ObservationPanel::rated_cell_mask() const {
  std::vector<uint8_t> mask(node_reports.size(), 0);
  for (const auto& r : ratings) mask[cell_index(r.node, r.type, r.week)] = 1;
  return mask;
}

std::vector<uint8_t> ObservationPanel::rated_type_mask(const WeekWindow& window) const {
  std::vector<uint8_t> mask(tau(), 0);
  const bool all = window.empty();
  for (const auto& r : ratings)
    if (all || (r.week >= window.begin && r.week < window.end)) mask[r.type] = 1;
  return mask;
}

void ObservationPanel::validate() const {
  if (static_cast<size_t>(n) * tau() * num_weeks != node_reports.size())
    throw std::runtime_error("panel: indicator buffer size mismatch");
  if (catalog.has_observed_ratings.size() != catalog.names.size())
    throw std::runtime_error("panel: catalog flag size mismatch");
  for (uint8_t v : node_reports)
    if (v > 1) throw std::runtime_error("panel: non-binary indicator");
  for (const auto& r : ratings) {
    if (r.node < 0 || r.node >= n || r.type < 0 || r.type >= tau() || r.week < 0 ||
        r.week >= num_weeks)
      throw std::runtime_error("panel: rating key out of range");
    const auto it = sub_to_node.find(r.sub_unit);
    if (it == sub_to_node.end() || it->second != r.node)
      throw std::runtime_error("panel: rating sub-unit not mapped to its node");
    if (r.report > 1) throw std::runtime_error("panel: non-binary sub-node indicator");
    if (!catalog.has_observed_ratings[r.type])
      throw std::runtime_error("panel: rating for a type not flagged as rated");
  }
  // Sub-node report series exist only where that (sub, type) pair is rated.
  std::map<std::pair<int64_t, int>, bool> rated_pair;
  for (const auto& r : ratings) rated_pair[{r.sub_unit, r.type}] = true;
  for (const auto& [key, weeks] : sub_report_weeks) {
    if (!rated_pair.count(key))
      throw std::runtime_error("panel: sub-node reports without any rating for that pair");
    if (!std::is_sorted(weeks.begin(), weeks.end()))
      throw std::runtime_error("panel: sub report weeks not sorted");
  }
}

ObservationPanel make_empty_panel(int n, IncidentCatalog catalog, int num_weeks,
                                  std::string start_date) {
  ObservationPanel p;
  p.n = n;
  p.num_weeks = num_weeks;
  p.start_date = std::move(start_date);
  p.catalog = std::move(catalog);
  p.node_reports.assign(static_cast<size_t>(n) * p.tau() * num_weeks, 0);
  return p;
}

double empirical_report_frequency(const ObservationPanel& panel, int node, int type,
                                  const WeekWindow& window) {
  if (window.empty()) throw std::invalid_argument("empirical_report_frequency: empty window");
  long count = 0;
  for (int t = window.begin; t < window.end; ++t) count += panel.report(node, type, t);
  return static_cast<double>(count) / window.size();
}

ObservationPanel carry_forward_ratings(const ObservationPanel& panel) {
  ObservationPanel out = panel;
  // Group observation indices by (sub, type), keep chronological order.
  std::map<std::pair<int64_t, int>, std::vector<size_t>> series;
  for (size_t idx = 0; idx < panel.ratings.size(); ++idx) {
    const auto& r = panel.ratings[idx];
    series[{r.sub_unit, r.type}].push_back(idx);
  }
  for (auto& [key, indices] : series) {
    std::stable_sort(indices.begin(), indices.end(), [&](size_t a, size_t b) {
      return panel.ratings[a].week < panel.ratings[b].week;
    });
    std::vector<uint8_t> observed(panel.num_weeks, 0);
    for (size_t idx : indices) observed[panel.ratings[idx].week] = 1;
    for (size_t pos = 0; pos < indices.size(); ++pos) {
      const RatingObs& obs = panel.ratings[indices[pos]];
      // Find the next inspection strictly after this one; fill the gap.
      int next_week = panel.num_weeks;
      for (size_t q = pos + 1; q < indices.size(); ++q) {
        if (panel.ratings[indices[q]].week > obs.week) {
          next_week = panel.ratings[indices[q]].week;
          break;
        }
      }
      for (int t = obs.week + 1; t < next_week; ++t) {
        if (observed[t]) continue;  // never overwrite an observed week
        RatingObs filled = obs;
        filled.week = t;
        filled.report = out.sub_report(obs.sub_unit, obs.type, t) ? 1 : 0;
        out.ratings.push_back(filled);
        observed[t] = 1;
      }
    }
  }
  std::stable_sort(out.ratings.begin(), out.ratings.end(), [](const RatingObs& a, const RatingObs& b) {
    return std::tie(a.node, a.type, a.sub_unit, a.week) <
           std::tie(b.node, b.type, b.sub_unit, b.week);
  });
  return out;
}

}  // namespace urban
