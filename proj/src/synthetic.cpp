#include "urban/synthetic.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <set>
#include <stdexcept>

#include "urban/rng.hpp"
#include "urban/stats.hpp"

namespace urban {

Eigen::VectorXd fit_reference_coefficients(const ObservationPanel& panel,
                                           const Demographics& demographics,
                                           const WeekWindow& window) {
  const int dim = demographics.dim();
  std::map<int, std::vector<const RatingObs*>> by_type;
  for (const auto& r : panel.ratings)
    if (window.empty() || (r.week >= window.begin && r.week < window.end))
      by_type[r.type].push_back(&r);

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim + 1);
  int used = 0;
  for (const auto& [type, rows] : by_type) {
    bool any_pos = false, any_neg = false;
    for (const auto* r : rows) (r->report ? any_pos : any_neg) = true;
    if (!any_pos || !any_neg) {
      std::cerr << "fit_reference_coefficients: type " << type
                << " has single-class report labels; skipped\n";
      continue;
    }
    Eigen::MatrixXd features(rows.size(), dim + 1);
    Eigen::VectorXd labels(rows.size());
    for (size_t j = 0; j < rows.size(); ++j) {
      features(j, 0) = rows[j]->rating;
      features.row(j).tail(dim) = demographics.features.row(rows[j]->node);
      labels[j] = rows[j]->report;
    }
    sum += logistic_regression(features, labels).coefficients;
    ++used;
  }
  if (used == 0)
    throw std::runtime_error("fit_reference_coefficients: no usable rated type");
  return sum / used;
}

std::vector<Eigen::VectorXd> draw_type_coefficients(const Eigen::VectorXd& theta_mean,
                                                    double sd, uint64_t seed,
                                                    int num_types) {
  if (sd < 0.0) throw std::invalid_argument("draw_type_coefficients: negative sd");
  std::vector<Eigen::VectorXd> out;
  out.reserve(num_types);
  for (int k = 0; k < num_types; ++k) {
    auto rng = substream(seed, "coefficients", static_cast<uint64_t>(k));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd theta(theta_mean.size());
    for (Eigen::Index j = 0; j < theta_mean.size(); ++j)
      theta[j] = theta_mean[j] + sd * gauss(rng);
    out.push_back(std::move(theta));
  }
  return out;
}

double default_frequency_clamp(int window_weeks) {
  if (window_weeks <= 0) throw std::invalid_argument("window must be non-empty");
  return 1.0 / (2.0 * window_weeks);
}

TypeGeneration generate_type_ratings(const Eigen::VectorXd& frequencies,
                                     const std::vector<int>& nodes,
                                     const Eigen::MatrixXd& features,
                                     const Eigen::VectorXd& theta_drawn, double eps) {
  if (frequencies.size() != static_cast<Eigen::Index>(nodes.size()))
    throw std::invalid_argument("generate_type_ratings: pattern size mismatch");
  if (!(eps > 0.0 && eps < 0.5))
    throw std::invalid_argument("generate_type_ratings: eps outside (0, 0.5)");
  const Eigen::Index m = frequencies.size();
  Eigen::VectorXd z(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double p = std::clamp(frequencies[j], eps, 1.0 - eps);
    z[j] = logit(p) - theta_drawn.dot(features.row(nodes[j]));
  }
  const double shift = z.mean();
  const double sd = std::sqrt((z.array() - shift).square().sum() / static_cast<double>(m));
  if (sd == 0.0) throw std::runtime_error("generate_type_ratings: degenerate type");
  TypeGeneration gen;
  gen.coefficients.alpha = -sd;
  gen.coefficients.theta = theta_drawn;
  gen.coefficients.theta[theta_drawn.size() - 1] += shift;  // intercept column is last
  gen.nodes = nodes;
  gen.ratings = (z.array() - shift) / gen.coefficients.alpha;
  return gen;
}

namespace {

GroundTruthBlock generate_window_block(const ObservationPanel& panel,
                                       const Demographics& demographics,
                                       const WeekWindow& window,
                                       const std::vector<Eigen::VectorXd>& thetas,
                                       double eps) {
  GroundTruthBlock block;
  block.window = window;
  const auto rated = panel.rated_type_mask(window);
  for (int k = 0; k < panel.tau(); ++k) {
    if (!rated[k]) continue;
    std::set<int> node_set;
    for (const auto& r : panel.ratings)
      if (r.type == k && r.week >= window.begin && r.week < window.end)
        node_set.insert(r.node);
    std::vector<int> nodes(node_set.begin(), node_set.end());
    Eigen::VectorXd freqs(nodes.size());
    for (size_t j = 0; j < nodes.size(); ++j)
      freqs[j] = empirical_report_frequency(panel, nodes[j], k, window);
    const TypeGeneration gen =
        generate_type_ratings(freqs, nodes, demographics.features, thetas[k], eps);
    block.types.push_back(k);
    block.alpha.push_back(gen.coefficients.alpha);
    block.theta.push_back(gen.coefficients.theta);
    block.pattern_nodes.push_back(gen.nodes);
    block.values.push_back(
        std::vector<double>(gen.ratings.data(), gen.ratings.data() + gen.ratings.size()));
  }
  return block;
}

void overwrite_ratings(ObservationPanel& panel, const GroundTruthBlock& block) {
  for (size_t idx = 0; idx < block.types.size(); ++idx) {
    const int k = block.types[idx];
    std::map<int, double> value_of;
    for (size_t j = 0; j < block.pattern_nodes[idx].size(); ++j)
      value_of[block.pattern_nodes[idx][j]] = block.values[idx][j];
    for (auto& r : panel.ratings) {
      if (r.type != k || r.week < block.window.begin || r.week >= block.window.end) continue;
      r.rating = value_of.at(r.node);
    }
  }
}

}  // namespace

SemiSyntheticResult make_semi_synthetic_panel(const ObservationPanel& real_panel,
                                              const Demographics& demographics,
                                              const WeekWindow& train_weeks,
                                              const WeekWindow& test_weeks,
                                              const GeneratorSpec& spec) {
  SemiSyntheticResult out;
  out.panel = real_panel;
  // Keep only rating rows inside the two generation windows.
  std::vector<RatingObs> kept;
  for (const auto& r : out.panel.ratings) {
    const bool in_train = r.week >= train_weeks.begin && r.week < train_weeks.end;
    const bool in_test = r.week >= test_weeks.begin && r.week < test_weeks.end;
    if (in_train || in_test) kept.push_back(r);
  }
  out.panel.ratings = std::move(kept);

  const std::vector<Eigen::VectorXd> thetas = draw_type_coefficients(
      spec.theta_mean, spec.theta_sd, spec.seed, real_panel.tau());
  const double eps_train = spec.freq_clamp_eps > 0.0 ? spec.freq_clamp_eps
                                                     : default_frequency_clamp(train_weeks.size());
  const double eps_test = spec.freq_clamp_eps > 0.0 ? spec.freq_clamp_eps
                                                    : default_frequency_clamp(test_weeks.size());

  out.truth.mode = "semi";
  out.truth.seed = spec.seed;
  out.truth.theta_names = demographics.names;
  out.truth.theta_names.push_back("intercept");
  out.truth.train =
      generate_window_block(out.panel, demographics, train_weeks, thetas, eps_train);
  out.truth.test =
      generate_window_block(out.panel, demographics, test_weeks, thetas, eps_test);
  overwrite_ratings(out.panel, out.truth.train);
  overwrite_ratings(out.panel, out.truth.test);
  // Sub-node indicators and node indicators stay real.
  for (int k = 0; k < out.panel.tau(); ++k) {
    bool any = false;
    for (const auto& r : out.panel.ratings)
      if (r.type == k) {
        any = true;
        break;
      }
    out.panel.catalog.has_observed_ratings[k] = any ? 1 : 0;
  }
  return out;
}

ObservationPanel subsample_ratings(const ObservationPanel& panel, int type, double fraction,
                                   uint64_t seed, const WeekWindow& window) {
  if (fraction < 0.0 || fraction > 1.0)
    throw std::invalid_argument("subsample_ratings: fraction outside [0,1]");
  const bool windowed = !window.empty();
  auto in_scope = [&](const RatingObs& r) {
    return r.type == type && (!windowed || (r.week >= window.begin && r.week < window.end));
  };
  std::vector<size_t> of_type;
  for (size_t i = 0; i < panel.ratings.size(); ++i)
    if (in_scope(panel.ratings[i])) of_type.push_back(i);
  const size_t keep_count =
      static_cast<size_t>(std::lround(fraction * static_cast<double>(of_type.size())));

  // Partial Fisher-Yates for a deterministic uniform subset.
  auto rng = substream(seed, "subsample", static_cast<uint64_t>(type));
  std::vector<size_t> pool = of_type;
  for (size_t j = 0; j < keep_count; ++j) {
    std::uniform_int_distribution<size_t> pick(j, pool.size() - 1);
    std::swap(pool[j], pool[pick(rng)]);
  }
  std::set<size_t> keep(pool.begin(), pool.begin() + keep_count);

  ObservationPanel out = panel;
  out.ratings.clear();
  for (size_t i = 0; i < panel.ratings.size(); ++i)
    if (!in_scope(panel.ratings[i]) || keep.count(i)) out.ratings.push_back(panel.ratings[i]);
  bool any = false;
  for (const auto& r : out.ratings)
    if (r.type == type) {
      any = true;
      break;
    }
  out.catalog.has_observed_ratings[type] = any ? 1 : 0;
  // Prune sub-report series that lost every rating row.
  for (auto it = out.sub_report_weeks.begin(); it != out.sub_report_weeks.end();) {
    if (it->first.second != type) {
      ++it;
      continue;
    }
    bool found = false;
    for (const auto& r : out.ratings)
      if (r.sub_unit == it->first.first && r.type == type) {
        found = true;
        break;
      }
    it = found ? std::next(it) : out.sub_report_weeks.erase(it);
  }
  return out;
}

Eigen::VectorXd default_theta_mean(int num_features) {
  // A confounded reporting profile: density/education/income style effects of
  // realistic sign and magnitude, intercept centered at zero.
  std::vector<double> base = {0.50, 0.32, 0.23, 0.35, 0.19, 0.21};
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(num_features + 1);
  for (int j = 0; j < num_features; ++j) mean[j] = base[j % base.size()];
  return mean;
}

FullSyntheticData make_fully_synthetic(const FullSyntheticSpec& spec) {
  FullSyntheticData data;
  const int n = spec.grid_rows * spec.grid_cols;
  data.graph = grid_graph(spec.grid_rows, spec.grid_cols);

  {
    auto rng = substream(spec.seed, "demographics");
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd raw(n, spec.num_features);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < spec.num_features; ++j) raw(i, j) = gauss(rng);
    data.demographics = normalize_demographics(raw);
  }

  IncidentCatalog catalog;
  for (int k = 0; k < spec.num_types; ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "type_%02d", k);
    catalog.names.push_back(name);
    catalog.has_observed_ratings.push_back(k < spec.num_rated ? 1 : 0);
    catalog.agency.push_back("synthetic");
  }
  data.panel = make_empty_panel(n, catalog, spec.num_weeks, spec.start_date);

  const Eigen::VectorXd theta_mean =
      spec.theta_mean.size() > 0 ? spec.theta_mean : default_theta_mean(spec.num_features);
  if (theta_mean.size() != spec.num_features + 1)
    throw std::invalid_argument("make_fully_synthetic: theta_mean length mismatch");
  const std::vector<Eigen::VectorXd> thetas =
      draw_type_coefficients(theta_mean, spec.theta_sd, spec.seed, spec.num_types);
  const double eps = spec.freq_clamp_eps > 0.0 ? spec.freq_clamp_eps
                                               : default_frequency_clamp(spec.num_weeks);

  GroundTruthBlock block;
  block.window = WeekWindow{0, spec.num_weeks};
  std::vector<int> all_nodes(n);
  for (int i = 0; i < n; ++i) all_nodes[i] = i;

  for (int k = 0; k < spec.num_types; ++k) {
    auto base_rng = substream(spec.seed, "base_rate", static_cast<uint64_t>(k));
    std::uniform_real_distribution<double> base_pick(logit(spec.base_frequency_min),
                                                     logit(spec.base_frequency_max));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double base_logit = base_pick(base_rng);
    Eigen::VectorXd probs(n);
    for (int i = 0; i < n; ++i)
      probs[i] = sigmoid(base_logit + spec.cell_logit_sd * gauss(base_rng));

    const TypeGeneration gen =
        generate_type_ratings(probs, all_nodes, data.demographics.features, thetas[k], eps);
    block.types.push_back(k);
    block.alpha.push_back(gen.coefficients.alpha);
    block.theta.push_back(gen.coefficients.theta);
    block.pattern_nodes.push_back(all_nodes);
    block.values.push_back(
        std::vector<double>(gen.ratings.data(), gen.ratings.data() + gen.ratings.size()));

    // Reports are Bernoulli draws from the reporting model itself, which by
    // construction has success probability equal to the clamped base rate.
    auto report_rng = substream(spec.seed, "reports", static_cast<uint64_t>(k));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
      const double p = sigmoid(gen.coefficients.alpha * gen.ratings[i] +
                               gen.coefficients.theta.dot(data.demographics.features.row(i)));
      for (int t = 0; t < spec.num_weeks; ++t)
        if (unit(report_rng) < p) data.panel.set_report(i, k, t, true);
    }

    if (k < spec.num_rated) {
      auto pattern_rng = substream(spec.seed, "pattern", static_cast<uint64_t>(k));
      std::vector<int> shuffled = all_nodes;
      for (int j = n - 1; j > 0; --j) {
        std::uniform_int_distribution<int> pick(0, j);
        std::swap(shuffled[j], shuffled[pick(pattern_rng)]);
      }
      const int pattern_size =
          std::max(1, static_cast<int>(std::lround(spec.pattern_fraction * n)));
      auto week_rng = substream(spec.seed, "inspection_weeks", static_cast<uint64_t>(k));
      std::uniform_real_distribution<double> unit_w(0.0, 1.0);
      std::uniform_int_distribution<int> any_week(0, spec.num_weeks - 1);
      for (int j = 0; j < pattern_size; ++j) {
        const int i = shuffled[j];
        std::vector<int> weeks;
        for (int t = 0; t < spec.num_weeks; ++t)
          if (unit_w(week_rng) < spec.rating_week_prob) weeks.push_back(t);
        if (weeks.empty()) weeks.push_back(any_week(week_rng));
        // One sub-unit per node keeps node and sub-node views coherent.
        const int64_t sub = i;
        data.panel.sub_to_node[sub] = i;
        auto& sub_weeks = data.panel.sub_report_weeks[{sub, k}];
        for (int t = 0; t < spec.num_weeks; ++t)
          if (data.panel.report(i, k, t)) sub_weeks.push_back(t);
        for (int t : weeks) {
          RatingObs obs;
          obs.sub_unit = sub;
          obs.node = i;
          obs.type = k;
          obs.week = t;
          obs.report = data.panel.report(i, k, t);
          obs.rating = gen.ratings[i];
          data.panel.ratings.push_back(obs);
        }
      }
    }
  }

  data.truth.mode = "full";
  data.truth.seed = spec.seed;
  data.truth.theta_names = data.demographics.names;
  data.truth.theta_names.push_back("intercept");
  data.truth.train = block;
  data.truth.test = block;
  return data;
}

}  // namespace urban
