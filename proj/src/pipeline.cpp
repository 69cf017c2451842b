#include "urban/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "urban/ingest.hpp"
#include "urban/rng.hpp"
#include "urban/panel_io.hpp"
#include "urban/synthetic.hpp"

namespace urban {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

int feature_column(const Demographics& demographics, const std::string& name) {
  for (size_t j = 0; j < demographics.names.size(); ++j)
    if (demographics.names[j] == name) return static_cast<int>(j);
  return -1;
}

MetricReportOptions resolve_metric_options(const Config& config,
                                           const Demographics& demographics) {
  MetricReportOptions options;
  if (config.has("topk")) {
    options.topk.clear();
    for (const auto& s : config.get_list("topk")) options.topk.push_back(std::stoi(s));
  }
  options.ece_bins = config.get_int("ece_bins", 10);
  options.budget_fraction = config.get_double("budget_fraction", 0.10);
  options.income_column =
      feature_column(demographics, config.get_string("income_feature", "log_median_income"));
  options.share_column =
      feature_column(demographics, config.get_string("share_feature", "pct_white"));
  return options;
}

}  // namespace

LoadedInputs load_inputs(const Config& config) {
  LoadedInputs in;
  in.panel = load_panel(config.require_string("panel"), config.require_string("panel_header"));
  const auto [raw, names] = load_demographics_csv(config.require_string("demographics"));
  in.demographics = normalize_demographics(raw, names);
  in.graph = build_graph(load_edges_csv(config.require_string("edges")), in.panel.n);
  if (in.demographics.n() != in.panel.n)
    throw std::runtime_error("inputs: demographics row count does not match the panel");
  return in;
}

SplitSpec resolve_split(const Config& config, const ObservationPanel& panel) {
  const long start_day = panel.start_day();
  const int panel_start = month_of_day(start_day);
  const int panel_end = month_of_day(start_day + 7L * (panel.num_weeks - 1)) + 1;
  const auto splits = make_time_splits(
      panel_start, panel_end, config.get_int("window_months", 24),
      config.get_int("train_months", 18), config.get_int("stride_months", 1),
      config.get_int("validation_months", 3));
  if (splits.empty()) throw std::runtime_error("resolve_split: panel span too short");
  const int index = config.get_int("split", 0);
  if (index < 0 || index >= static_cast<int>(splits.size()))
    throw std::runtime_error("resolve_split: split index " + std::to_string(index) +
                             " outside [0," + std::to_string(splits.size()) + ")");
  return splits[index];
}

VariantConfig resolve_variant(const Config& config) {
  VariantConfig v = variant_config(config.get_string("variant", "full"));
  v.weights.observed_bce = config.get_double("gamma1", v.weights.observed_bce);
  v.weights.rating_mse = config.get_double("gamma2", v.weights.rating_mse);
  v.weights.rating_reg = config.get_double("gamma3", v.weights.rating_reg);
  v.weights.theta_reg = config.get_double("gamma4", v.weights.theta_reg);
  v.weights.alpha_relu = config.get_double("gamma5", v.weights.alpha_relu);
  v.unobserved_head_gradient =
      config.get_double("unobserved_head_gradient", v.unobserved_head_gradient);
  return v;
}

TrainConfig resolve_train_config(const Config& config) {
  TrainConfig t;
  t.learning_rate = config.get_double("learning_rate", t.learning_rate);
  t.batch_size = config.get_int("batch_size", t.batch_size);
  t.epochs = config.get_int("epochs", t.epochs);
  t.seed = config.get_seed("seed", t.seed);
  t.variant = config.get_string("variant", t.variant);
  t.subsampled_type = config.get_int("subsample_type", t.subsampled_type);
  t.validation = config.get_string("validation", t.validation);
  t.hidden = config.get_int("hidden", t.hidden);
  t.emb_dim = config.get_int("emb_dim", t.emb_dim);
  t.component_log = config.get_string("component_log", "");
  return t;
}

int run_ingest(const Config& config, const std::string& out_dir) {
  ensure_dir(out_dir);
  ColumnMap columns;
  columns.week = config.get_string("col_week", columns.week);
  columns.type = config.get_string("col_type", columns.type);
  columns.node = config.get_string("col_node", columns.node);
  columns.sub_unit = config.get_string("col_sub_unit", columns.sub_unit);
  columns.latitude = config.get_string("col_latitude", columns.latitude);
  columns.longitude = config.get_string("col_longitude", columns.longitude);
  columns.rating = config.get_string("col_rating", columns.rating);

  const auto reports = parse_report_records(config.require_string("reports"), columns);
  std::cerr << "ingest: " << reports.records.size() << " reports ("
            << reports.malformed_rows << " malformed rows skipped)\n";
  std::vector<RawInspectionRecord> inspections;
  if (config.has("inspections")) {
    auto parsed = parse_inspection_records(config.require_string("inspections"), columns);
    std::cerr << "ingest: " << parsed.records.size() << " inspections ("
              << parsed.malformed_rows << " malformed rows skipped)\n";
    inspections = std::move(parsed.records);
  }

  IngestOptions options;
  options.min_type_rate = config.get_double("min_type_rate", options.min_type_rate);
  options.match_threshold_meters =
      config.get_double("match_threshold_meters", options.match_threshold_meters);
  options.responsive_percentile =
      config.get_double("responsive_percentile", options.responsive_percentile);
  options.responsive_filter_types = config.get_list("responsive_filter_types");
  for (const auto& name : config.get_list("coordinate_match_types"))
    options.rating_match_modes[name] = MatchMode::Coordinates;
  options.carry_forward = config.get_bool("carry_forward", true);

  ObservationPanel panel = assemble_panel(
      std::move(reports.records), std::move(inspections), config.get_int("nodes", 0),
      config.get_int("weeks", 0), config.require_string("start_date"), options);
  panel.validate();

  const Demographics* demo_ptr = nullptr;
  Demographics demographics;
  if (config.has("demographics")) {
    const auto [raw, names] = load_demographics_csv(config.require_string("demographics"));
    demographics = normalize_demographics(raw, names);
    demo_ptr = &demographics;
  }
  save_panel(panel, join(out_dir, "panel.csv"), join(out_dir, "panel.json"), demo_ptr);
  std::cerr << "ingest: wrote panel with " << panel.tau() << " types and "
            << panel.ratings.size() << " rating rows\n";
  return 0;
}

int run_generate(const Config& config, const std::string& out_dir) {
  ensure_dir(out_dir);
  const std::string mode = config.get_string("mode", "full");
  const uint64_t seed = config.get_seed("seed", 0);

  if (mode == "full") {
    FullSyntheticSpec spec;
    spec.grid_rows = config.get_int("grid_rows", spec.grid_rows);
    spec.grid_cols = config.get_int("grid_cols", spec.grid_cols);
    spec.num_types = config.get_int("num_types", spec.num_types);
    spec.num_rated = config.get_int("num_rated", spec.num_rated);
    spec.num_weeks = config.get_int("num_weeks", spec.num_weeks);
    spec.num_features = config.get_int("num_features", spec.num_features);
    spec.start_date = config.get_string("start_date", spec.start_date);
    spec.theta_sd = config.get_double("theta_sd", spec.theta_sd);
    spec.base_frequency_min = config.get_double("base_frequency_min", spec.base_frequency_min);
    spec.base_frequency_max = config.get_double("base_frequency_max", spec.base_frequency_max);
    spec.cell_logit_sd = config.get_double("cell_logit_sd", spec.cell_logit_sd);
    spec.pattern_fraction = config.get_double("pattern_fraction", spec.pattern_fraction);
    spec.rating_week_prob = config.get_double("rating_week_prob", spec.rating_week_prob);
    spec.freq_clamp_eps = config.get_double("freq_clamp_eps", spec.freq_clamp_eps);
    spec.seed = seed;
    if (config.has("theta_mean")) {
      const auto vals = config.get_double_list("theta_mean");
      spec.theta_mean = Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
    }
    FullSyntheticData data = make_fully_synthetic(spec);
    if (config.has("subsample_type"))
      data.panel = subsample_ratings(data.panel, config.get_int("subsample_type", -1),
                                     config.get_double("subsample_fraction", 1.0), seed);
    data.panel.validate();
    save_panel(data.panel, join(out_dir, "panel.csv"), join(out_dir, "panel.json"),
               &data.demographics);
    save_demographics_csv(data.demographics.raw, data.demographics.names,
                          join(out_dir, "demographics.csv"));
    save_edges_csv(data.graph.edges, join(out_dir, "edges.csv"));
    save_ground_truth(data.truth, join(out_dir, "truth.json"));
  } else if (mode == "semi") {
    LoadedInputs in = load_inputs(config);
    const SplitSpec split = resolve_split(config, in.panel);
    const long day0 = in.panel.start_day();
    const WeekWindow train_weeks =
        weeks_in_months(day0, in.panel.num_weeks, split.train_start, split.train_end);
    const WeekWindow test_weeks =
        weeks_in_months(day0, in.panel.num_weeks, split.test_start, split.test_end);
    GeneratorSpec spec;
    spec.theta_sd = config.get_double("theta_sd", spec.theta_sd);
    spec.freq_clamp_eps = config.get_double("freq_clamp_eps", 0.0);
    spec.seed = seed;
    if (config.has("theta_mean")) {
      const auto vals = config.get_double_list("theta_mean");
      spec.theta_mean = Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
    } else {
      // Means from a logistic fit on the panel's own observed ratings.
      const Eigen::VectorXd reference =
          fit_reference_coefficients(in.panel, in.demographics, train_weeks);
      spec.theta_mean = reference.tail(reference.size() - 1);
    }
    SemiSyntheticResult result =
        make_semi_synthetic_panel(in.panel, in.demographics, train_weeks, test_weeks, spec);
    if (config.has("subsample_type"))
      result.panel = subsample_ratings(result.panel, config.get_int("subsample_type", -1),
                                       config.get_double("subsample_fraction", 1.0), seed);
    result.panel.validate();
    save_panel(result.panel, join(out_dir, "panel.csv"), join(out_dir, "panel.json"),
               &in.demographics);
    save_ground_truth(result.truth, join(out_dir, "truth.json"));
  } else {
    throw std::runtime_error("generate: unknown mode '" + mode + "'");
  }
  ordered_json meta;
  meta["config_hash"] = config.hash();
  meta["seed"] = seed;
  meta["mode"] = mode;
  write_text(join(out_dir, "generate_meta.json"), meta.dump(2) + "\n");
  return 0;
}

int run_train(const Config& config, const std::string& out_dir) {
  ensure_dir(out_dir);
  LoadedInputs in = load_inputs(config);
  const SplitSpec split = resolve_split(config, in.panel);
  if (config.has("subsample_type")) {
    WeekWindow scope{0, 0};
    if (config.get_string("subsample_window", "all") == "train")
      scope = weeks_in_months(in.panel.start_day(), in.panel.num_weeks, split.train_start,
                              split.train_end);
    in.panel = subsample_ratings(in.panel, config.get_int("subsample_type", -1),
                                 config.get_double("subsample_fraction", 1.0),
                                 config.get_seed("seed", 0), scope);
  }
  const VariantConfig variant = resolve_variant(config);
  TrainConfig train_config = resolve_train_config(config);
  if (!train_config.component_log.empty())
    train_config.component_log = join(out_dir, train_config.component_log);

  const TrainedModel trained =
      train(in.panel, in.demographics, in.graph, split, variant, train_config);

  save_checkpoint(trained.model, join(out_dir, "checkpoint.bin"));
  std::ofstream history(join(out_dir, "history.jsonl"));
  for (const auto& epoch : trained.history) {
    ordered_json line;
    line["epoch"] = epoch.epoch;
    line["unobs"] = epoch.components.unobs;
    line["obs"] = epoch.components.obs;
    line["rating"] = epoch.components.rating;
    line["reg"] = epoch.components.reg;
    line["theta_reg"] = epoch.components.theta_reg;
    line["alpha_relu"] = epoch.components.alpha_relu;
    line["total"] = epoch.total;
    if (std::isfinite(epoch.validation_score)) line["validation"] = epoch.validation_score;
    history << line.dump() << "\n";
  }
  Config resolved = config;
  resolved.set("config_hash", config.hash());
  resolved.set("selected_epoch", std::to_string(trained.selected_epoch));
  write_text(join(out_dir, "config_used.cfg"), resolved.canonical());
  std::cerr << "train: " << variant.name << " finished; selected epoch "
            << trained.selected_epoch << "\n";
  return 0;
}

namespace {

// External predictions (pluggable baseline): CSV node,type,pred_rating[,pred_report].
void load_predictions_csv(const std::string& path, Eigen::MatrixXd& pred_rating,
                          Eigen::MatrixXd& pred_report) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  bool any_report = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f;
    std::vector<std::string> fields;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() < 3) throw std::runtime_error("predictions csv: bad row");
    const int i = std::stoi(fields[0]);
    const int k = std::stoi(fields[1]);
    pred_rating(i, k) = std::stod(fields[2]);
    if (fields.size() > 3 && !fields[3].empty()) {
      pred_report(i, k) = std::stod(fields[3]);
      any_report = true;
    }
  }
  if (!any_report) pred_report.resize(0, 0);
}

}  // namespace

int run_evaluate(const Config& config, const std::string& out_dir) {
  ensure_dir(out_dir);
  LoadedInputs in = load_inputs(config);
  const SplitSpec split = resolve_split(config, in.panel);
  const long day0 = in.panel.start_day();
  const WeekWindow test_weeks =
      weeks_in_months(day0, in.panel.num_weeks, split.test_start, split.test_end);
  const WeekWindow train_weeks =
      weeks_in_months(day0, in.panel.num_weeks, split.train_start, split.train_end);
  const VariantConfig variant = resolve_variant(config);

  Eigen::MatrixXd pred_rating(in.panel.n, in.panel.tau());
  Eigen::MatrixXd pred_report;
  std::optional<UrbanModel> model;
  if (config.has("predictions")) {
    pred_report = Eigen::MatrixXd::Zero(in.panel.n, in.panel.tau());
    load_predictions_csv(config.require_string("predictions"), pred_rating, pred_report);
  } else {
    model = load_checkpoint(config.require_string("checkpoint"));
    const Eigen::MatrixXd emb =
        model->node_embedder.forward(in.graph.normalized_adjacency(), ForwardMode::Eval);
    pred_rating = model->rating_matrix(emb);
    if (variant.head_policy != HeadLearning::Unused)
      pred_report = report_probability_matrix(model->head, pred_rating,
                                              in.demographics.features,
                                              variant.per_type_dispatch_for_all());
  }

  const Eigen::MatrixXd report_truth = report_frequency_matrix(in.panel, test_weeks);
  RatingTruth rating_truth;
  GroundTruthSidecar truth_sidecar;
  const bool has_sidecar = config.has("truth");
  if (has_sidecar) {
    truth_sidecar = load_ground_truth(config.require_string("truth"));
    rating_truth = rating_truth_from_block(truth_sidecar.test);
  } else {
    rating_truth = rating_truth_from_panel(in.panel, test_weeks);
  }

  const MetricReportOptions options = resolve_metric_options(config, in.demographics);
  const bool proxy = variant.name == "reports_only";
  MetricReport report =
      compute_metric_report(pred_rating, pred_report, report_truth, rating_truth,
                            in.demographics, in.panel.catalog, options, proxy);

  if (has_sidecar && model.has_value() && variant.head_policy != HeadLearning::Unused) {
    // Recovery of the train-window coefficients for types rated in training.
    std::vector<ReportingCoefficients> est, truth_coeffs;
    std::vector<std::string> names;
    const auto rated_in_train = in.panel.rated_type_mask(train_weeks);
    const auto& block = truth_sidecar.train;
    for (size_t idx = 0; idx < block.types.size(); ++idx) {
      const int k = block.types[idx];
      if (k >= static_cast<int>(rated_in_train.size()) || !rated_in_train[k]) continue;
      ReportingCoefficients e;
      e.alpha = model->head.alpha[k];
      e.theta = model->head.theta.row(k);
      est.push_back(std::move(e));
      ReportingCoefficients t;
      t.alpha = block.alpha[idx];
      t.theta = block.theta[idx];
      truth_coeffs.push_back(std::move(t));
      names.push_back(in.panel.catalog.names[k]);
    }
    if (!est.empty()) report.recovery = coefficient_recovery(est, truth_coeffs, names);
  }

  std::map<std::string, std::string> provenance;
  provenance["config_hash"] = config.hash();
  provenance["seed"] = std::to_string(config.get_seed("seed", 0));
  provenance["variant"] = variant.name;
  write_text(join(out_dir, "metrics.json"), metric_report_to_json(report, provenance));
  metric_report_to_csv(report, join(out_dir, "metrics.csv"));
  std::cerr << "evaluate: mean rating correlation " << report.mean_rating_correlation
            << ", mean report correlation " << report.mean_report_correlation << "\n";
  return 0;
}

int run_cluster(const Config& config, const std::string& out_dir) {
  ensure_dir(out_dir);
  LoadedInputs in = load_inputs(config);
  UrbanModel model = load_checkpoint(config.require_string("checkpoint"));
  const Eigen::MatrixXd emb =
      model.node_embedder.forward(in.graph.normalized_adjacency(), ForwardMode::Eval);
  const Eigen::MatrixXd pred_rating = model.rating_matrix(emb);
  const uint64_t seed = config.get_seed("seed", 0);

  const int node_k = config.get_int("node_clusters", 4);
  const KMeansResult nodes = kmeans(pred_rating, node_k, splitmix64(seed ^ 1));
  {
    std::ofstream out(join(out_dir, "node_labels.csv"));
    out << "node,cluster\n";
    for (size_t i = 0; i < nodes.labels.size(); ++i) out << i << "," << nodes.labels[i] << "\n";
  }
  const auto tests = demographic_tests(nodes.labels, node_k, in.demographics);
  {
    std::ofstream out(join(out_dir, "node_cluster_demographics.csv"));
    out << "feature";
    for (int c = 0; c < node_k; ++c) out << ",cluster_" << c;
    out << ",f_statistic,p_value\n";
    for (const auto& t : tests) {
      out << t.feature;
      for (double m : t.cluster_means) out << "," << m;
      out << "," << (t.anova.defined ? t.anova.f : 0.0) << ","
          << (t.anova.defined ? t.anova.p_value : 1.0) << "\n";
    }
  }

  const int type_k = std::min(config.get_int("type_clusters", 8), in.panel.tau());
  const Eigen::MatrixXd type_vectors = pred_rating.transpose();
  const KMeansResult types = kmeans(type_vectors, type_k, splitmix64(seed ^ 2));
  {
    std::ofstream out(join(out_dir, "type_labels.csv"));
    out << "type,name,cluster\n";
    for (size_t k = 0; k < types.labels.size(); ++k)
      out << k << "," << in.panel.catalog.names[k] << "," << types.labels[k] << "\n";
  }

  // Leading component of type variation against the type reporting rates.
  const WeekWindow all_weeks{0, in.panel.num_weeks};
  std::vector<double> frequencies;
  for (int k = 0; k < in.panel.tau(); ++k) {
    double sum = 0.0;
    for (int i = 0; i < in.panel.n; ++i)
      sum += empirical_report_frequency(in.panel, i, k, all_weeks);
    frequencies.push_back(sum / in.panel.n);
  }
  const CorrelationResult pca = pca_frequency_correlation(type_vectors, frequencies);
  ordered_json summary;
  summary["config_hash"] = config.hash();
  summary["seed"] = seed;
  summary["node_clusters"] = node_k;
  summary["node_inertia"] = nodes.inertia;
  summary["node_degenerate"] = nodes.degenerate;
  summary["type_clusters"] = type_k;
  summary["type_inertia"] = types.inertia;
  summary["pca_frequency_correlation"] = pca.defined ? ordered_json(pca.r) : ordered_json(nullptr);
  write_text(join(out_dir, "cluster_summary.json"), summary.dump(2) + "\n");
  return 0;
}

int run_sweep(const Config& config, const std::string& out_dir) {
  ensure_dir(out_dir);
  const std::vector<std::string> grid_keys = {
      "gamma1", "gamma2", "gamma3", "gamma4",     "gamma5",
      "learning_rate", "batch_size", "epochs", "hidden", "emb_dim"};
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  for (const auto& key : grid_keys) {
    const auto values = config.get_list(key);
    if (values.size() > 1) axes.emplace_back(key, values);
  }
  size_t total = 1;
  for (const auto& [key, values] : axes) total *= values.size();

  struct Row {
    size_t id;
    std::string params;
    double score;
    bool failed;
  };
  std::vector<Row> leaderboard;
  for (size_t point = 0; point < total; ++point) {
    Config run_config = config;
    size_t rem = point;
    std::string params;
    for (const auto& [key, values] : axes) {
      const std::string& value = values[rem % values.size()];
      rem /= values.size();
      run_config.set(key, value);
      params += (params.empty() ? "" : ";") + key + "=" + value;
    }
    run_config.set("validation", config.get_string("validation", "best"));
    const std::string run_dir = join(out_dir, "run_" + std::to_string(point));
    Row row{point, params, -std::numeric_limits<double>::infinity(), false};
    try {
      ensure_dir(run_dir);
      LoadedInputs in = load_inputs(run_config);
      const SplitSpec split = resolve_split(run_config, in.panel);
      const VariantConfig variant = resolve_variant(run_config);
      TrainConfig train_config = resolve_train_config(run_config);
      train_config.validation = "best";
      const TrainedModel trained =
          train(in.panel, in.demographics, in.graph, split, variant, train_config);
      // Leaderboard score: the selected epoch's validation score.
      row.score = trained.history[trained.selected_epoch].validation_score;
      save_checkpoint(trained.model, join(run_dir, "checkpoint.bin"));
      write_text(join(run_dir, "config_used.cfg"), run_config.canonical());
    } catch (const std::exception& e) {
      row.failed = true;
      std::cerr << "sweep: run " << point << " failed: " << e.what() << "\n";
    }
    leaderboard.push_back(std::move(row));
  }
  std::stable_sort(leaderboard.begin(), leaderboard.end(), [](const Row& a, const Row& b) {
    if (a.failed != b.failed) return !a.failed;
    return a.score > b.score;
  });
  std::ofstream out(join(out_dir, "leaderboard.csv"));
  out << "rank,run_id,validation_score,status,params\n";
  for (size_t rank = 0; rank < leaderboard.size(); ++rank) {
    const Row& row = leaderboard[rank];
    out << rank << "," << row.id << "," << (row.failed ? 0.0 : row.score) << ","
        << (row.failed ? "failed" : "ok") << ",\"" << row.params << "\"\n";
  }
  if (!leaderboard.empty() && !leaderboard.front().failed)
    std::cerr << "sweep: best run " << leaderboard.front().id << " ("
              << leaderboard.front().params << ") score " << leaderboard.front().score << "\n";
  return 0;
}

int run_report(const Config& config, const std::string& out_dir) {
  ensure_dir(out_dir);
  // Per-type correlation table (bar-chart data) from a metrics file.
  std::ifstream metrics_in(config.require_string("metrics"));
  if (!metrics_in) throw std::runtime_error("cannot open metrics file");
  nlohmann::json metrics;
  metrics_in >> metrics;
  {
    std::ofstream out(join(out_dir, "per_type_correlation.csv"));
    out << "section,type,name,correlation,rmse\n";
    for (const char* section : {"report_metrics", "rating_metrics"}) {
      if (!metrics.contains(section)) continue;
      for (const auto& m : metrics[section]) {
        out << section << "," << m.value("type", -1) << "," << m.value("name", "") << ",";
        if (m.contains("correlation") && !m["correlation"].is_null())
          out << m["correlation"].get<double>();
        out << "," << m.value("rmse", 0.0) << "\n";
      }
    }
  }
  // Coefficient scatter (estimated vs true) when a checkpoint + truth exist.
  if (config.has("checkpoint") && config.has("truth")) {
    const UrbanModel model = load_checkpoint(config.require_string("checkpoint"));
    const GroundTruthSidecar truth = load_ground_truth(config.require_string("truth"));
    std::ofstream out(join(out_dir, "coefficient_scatter.csv"));
    out << "type,coefficient,estimated,true\n";
    const auto& block = truth.train;
    for (size_t idx = 0; idx < block.types.size(); ++idx) {
      const int k = block.types[idx];
      if (k >= model.tau() || !model.head.rated[k]) continue;
      out << k << ",alpha," << model.head.alpha[k] << "," << block.alpha[idx] << "\n";
      for (Eigen::Index j = 0; j < block.theta[idx].size(); ++j) {
        const std::string label = static_cast<size_t>(j) < truth.theta_names.size()
                                      ? truth.theta_names[j]
                                      : "theta_" + std::to_string(j);
        out << k << "," << label << "," << model.head.theta(k, j) << ","
            << block.theta[idx][j] << "\n";
      }
    }
  }
  // Compact summary table.
  {
    std::ofstream out(join(out_dir, "summary.csv"));
    out << "metric,value\n";
    for (const char* key : {"mean_report_correlation", "mean_report_rmse",
                            "mean_rating_correlation", "mean_rating_rmse", "ece"}) {
      if (metrics.contains(key) && metrics[key].is_number())
        out << key << "," << metrics[key].get<double>() << "\n";
    }
    if (metrics.contains("coefficient_recovery")) {
      out << "coefficient_recovery_correlation,"
          << metrics["coefficient_recovery"].value("correlation", 0.0) << "\n";
      out << "coefficient_recovery_mae,"
          << metrics["coefficient_recovery"].value("mae", 0.0) << "\n";
    }
  }
  return 0;
}

}  // namespace urban
