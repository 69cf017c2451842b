#include "urban/panel_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "urban/csv.hpp"

namespace urban {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

json window_to_json(const WeekWindow& w) { return json::array({w.begin, w.end}); }

WeekWindow window_from_json(const json& j) {
  return WeekWindow{j.at(0).get<int>(), j.at(1).get<int>()};
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

}  // namespace

void save_panel(const ObservationPanel& panel, const std::string& csv_path,
                const std::string& json_path, const Demographics* demographics) {
  ordered_json header;
  header["format_version"] = 1;
  header["n"] = panel.n;
  header["tau"] = panel.tau();
  header["weeks"] = panel.num_weeks;
  header["start_date"] = panel.start_date;
  header["type_names"] = panel.catalog.names;
  header["has_observed_ratings"] = panel.catalog.has_observed_ratings;
  header["agency"] = panel.catalog.agency;
  if (demographics != nullptr) {
    header["feature_names"] = demographics->names;
    std::vector<double> means(demographics->column_mean.data(),
                              demographics->column_mean.data() + demographics->column_mean.size());
    std::vector<double> sds(demographics->column_sd.data(),
                            demographics->column_sd.data() + demographics->column_sd.size());
    header["normalization"] = {{"mean", means}, {"sd", sds}};
  }
  write_file(json_path, header.dump(2) + "\n");

  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("cannot write " + csv_path);
  out << "node,sub_unit,type,week,report,rating\n";
  const int tau = panel.tau();
  for (int i = 0; i < panel.n; ++i)
    for (int k = 0; k < tau; ++k)
      for (int t = 0; t < panel.num_weeks; ++t)
        if (panel.report(i, k, t)) out << i << ",," << k << "," << t << ",1,\n";
  for (const auto& [key, weeks] : panel.sub_report_weeks) {
    const auto& [sub, type] = key;
    const int node = panel.sub_to_node.at(sub);
    for (int t : weeks) out << node << "," << sub << "," << type << "," << t << ",1,\n";
  }
  char buf[340];
  for (const auto& r : panel.ratings) {
    std::snprintf(buf, sizeof(buf), "%d,%lld,%d,%d,%d,%.17g\n", r.node,
                  static_cast<long long>(r.sub_unit), r.type, r.week, int(r.report), r.rating);
    out << buf;
  }
}

ObservationPanel load_panel(const std::string& csv_path, const std::string& json_path) {
  const json header = read_json_file(json_path);
  IncidentCatalog catalog;
  catalog.names = header.at("type_names").get<std::vector<std::string>>();
  catalog.has_observed_ratings = header.at("has_observed_ratings").get<std::vector<uint8_t>>();
  if (header.contains("agency"))
    catalog.agency = header.at("agency").get<std::vector<std::string>>();
  ObservationPanel panel = make_empty_panel(header.at("n").get<int>(), std::move(catalog),
                                            header.at("weeks").get<int>(),
                                            header.at("start_date").get<std::string>());

  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty panel csv: " + csv_path);
  std::set<std::pair<int64_t, int>> seen_sub_weeks_key;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6) throw std::runtime_error("panel csv: bad row '" + line + "'");
    const int node = std::stoi(f[0]);
    const int type = std::stoi(f[2]);
    const int week = std::stoi(f[3]);
    const bool has_sub = !f[1].empty();
    const bool has_rating = !f[5].empty();
    if (!has_sub) {
      if (std::stoi(f[4]) != 0) panel.set_report(node, type, week, true);
      continue;
    }
    const int64_t sub = std::stoll(f[1]);
    panel.sub_to_node[sub] = node;
    if (has_rating) {
      RatingObs r;
      r.sub_unit = sub;
      r.node = node;
      r.type = type;
      r.week = week;
      r.report = static_cast<uint8_t>(std::stoi(f[4]));
      r.rating = std::stod(f[5]);
      panel.ratings.push_back(r);
    } else {
      panel.sub_report_weeks[{sub, type}].push_back(week);
    }
  }
  for (auto& [key, weeks] : panel.sub_report_weeks) {
    std::sort(weeks.begin(), weeks.end());
    weeks.erase(std::unique(weeks.begin(), weeks.end()), weeks.end());
  }
  return panel;
}

std::pair<Eigen::MatrixXd, std::vector<std::string>> load_demographics_csv(
    const std::string& path) {
  const CsvTable table = read_csv(path);
  const auto n = table.rows.size();
  const auto d = table.header.size();
  Eigen::MatrixXd raw(n, d);
  for (size_t i = 0; i < n; ++i) {
    if (table.rows[i].size() != d)
      throw std::runtime_error("demographics csv: ragged row " + std::to_string(i));
    for (size_t j = 0; j < d; ++j) raw(i, j) = std::stod(table.rows[i][j]);
  }
  return {raw, table.header};
}

void save_demographics_csv(const Eigen::MatrixXd& raw,
                           const std::vector<std::string>& names, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  out << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", raw(i, j));
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
}

std::vector<std::pair<int, int>> load_edges_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  std::vector<std::pair<int, int>> edges;
  edges.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    if (row.size() < 2) throw std::runtime_error("edges csv: bad row");
    edges.emplace_back(std::stoi(row[0]), std::stoi(row[1]));
  }
  return edges;
}

void save_edges_csv(const std::vector<std::pair<int, int>>& edges, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "u,v\n";
  for (const auto& [a, b] : edges) out << a << "," << b << "\n";
}

namespace {

json block_to_json(const GroundTruthBlock& b) {
  ordered_json j;
  j["window"] = window_to_json(b.window);
  ordered_json per_type = ordered_json::array();
  for (size_t idx = 0; idx < b.types.size(); ++idx) {
    ordered_json t;
    t["type"] = b.types[idx];
    t["alpha"] = b.alpha[idx];
    t["theta"] = std::vector<double>(b.theta[idx].data(), b.theta[idx].data() + b.theta[idx].size());
    t["nodes"] = b.pattern_nodes[idx];
    t["values"] = b.values[idx];
    per_type.push_back(std::move(t));
  }
  j["per_type"] = std::move(per_type);
  return j;
}

GroundTruthBlock block_from_json(const json& j) {
  GroundTruthBlock b;
  b.window = window_from_json(j.at("window"));
  for (const auto& t : j.at("per_type")) {
    b.types.push_back(t.at("type").get<int>());
    b.alpha.push_back(t.at("alpha").get<double>());
    const auto th = t.at("theta").get<std::vector<double>>();
    b.theta.push_back(Eigen::Map<const Eigen::VectorXd>(th.data(), th.size()));
    b.pattern_nodes.push_back(t.at("nodes").get<std::vector<int>>());
    b.values.push_back(t.at("values").get<std::vector<double>>());
  }
  return b;
}

}  // namespace

void save_ground_truth(const GroundTruthSidecar& truth, const std::string& path) {
  ordered_json j;
  j["mode"] = truth.mode;
  j["seed"] = truth.seed;
  j["theta_names"] = truth.theta_names;
  j["train"] = block_to_json(truth.train);
  j["test"] = block_to_json(truth.test);
  write_file(path, j.dump(2) + "\n");
}

GroundTruthSidecar load_ground_truth(const std::string& path) {
  const json j = read_json_file(path);
  GroundTruthSidecar truth;
  truth.mode = j.at("mode").get<std::string>();
  truth.seed = j.at("seed").get<uint64_t>();
  truth.theta_names = j.at("theta_names").get<std::vector<std::string>>();
  truth.train = block_from_json(j.at("train"));
  truth.test = block_from_json(j.at("test"));
  return truth;
}

}  // namespace urban
