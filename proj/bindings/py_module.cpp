#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "urban/config.hpp"
#include "urban/demographics.hpp"
#include "urban/evaluation.hpp"
#include "urban/graph.hpp"
#include "urban/model.hpp"
#include "urban/panel.hpp"
#include "urban/panel_io.hpp"
#include "urban/pipeline.hpp"
#include "urban/splits.hpp"
#include "urban/synthetic.hpp"
#include "urban/training.hpp"

namespace py = pybind11;
using namespace urban;

namespace {

Config config_from_dict(const py::dict& d) {
  Config config;
  for (const auto& item : d)
    config.set(py::str(item.first).cast<std::string>(),
               py::str(item.second).cast<std::string>());
  return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Latent-state estimation for urban incidents from inspection ratings "
            "and crowdsourced reports";

  py::class_<SpatialGraph>(m, "SpatialGraph")
      .def_readonly("n", &SpatialGraph::n)
      .def_readonly("edges", &SpatialGraph::edges)
      .def("neighbor_lists", &SpatialGraph::neighbor_lists);
  m.def("build_graph", &build_graph, py::arg("edges"), py::arg("n"));
  m.def("grid_graph", &grid_graph, py::arg("rows"), py::arg("cols"));

  py::class_<Demographics>(m, "Demographics")
      .def_readonly("raw", &Demographics::raw)
      .def_readonly("features", &Demographics::features)
      .def_readonly("names", &Demographics::names)
      .def_readonly("column_mean", &Demographics::column_mean)
      .def_readonly("column_sd", &Demographics::column_sd);
  m.def("normalize_demographics", &normalize_demographics, py::arg("raw"),
        py::arg("names") = std::vector<std::string>{});

  py::class_<SplitSpec>(m, "SplitSpec")
      .def(py::init<>())
      .def_readwrite("train_start", &SplitSpec::train_start)
      .def_readwrite("train_end", &SplitSpec::train_end)
      .def_readwrite("test_start", &SplitSpec::test_start)
      .def_readwrite("test_end", &SplitSpec::test_end)
      .def_readwrite("val_start", &SplitSpec::val_start)
      .def_readwrite("val_end", &SplitSpec::val_end);
  m.def("month_index", py::overload_cast<int, int>(&month_index), py::arg("year"),
        py::arg("month"));
  m.def("make_time_splits", &make_time_splits, py::arg("panel_start_month"),
        py::arg("panel_end_month"), py::arg("window_months") = 24,
        py::arg("train_months") = 18, py::arg("stride_months") = 1,
        py::arg("validation_months") = 0);

  py::class_<WeekWindow>(m, "WeekWindow")
      .def(py::init([](int begin, int end) { return WeekWindow{begin, end}; }),
           py::arg("begin"), py::arg("end"))
      .def_readwrite("begin", &WeekWindow::begin)
      .def_readwrite("end", &WeekWindow::end);

  py::class_<ObservationPanel>(m, "ObservationPanel")
      .def_readonly("n", &ObservationPanel::n)
      .def_readonly("num_weeks", &ObservationPanel::num_weeks)
      .def_readonly("start_date", &ObservationPanel::start_date)
      .def_property_readonly("tau", &ObservationPanel::tau)
      .def_property_readonly("num_ratings",
                             [](const ObservationPanel& p) { return p.ratings.size(); })
      .def("report", &ObservationPanel::report, py::arg("node"), py::arg("type"),
           py::arg("week"))
      .def("rated_types",
           [](const ObservationPanel& p) { return p.catalog.rated_types(); })
      .def("type_names", [](const ObservationPanel& p) { return p.catalog.names; })
      .def("validate", &ObservationPanel::validate);
  m.def("load_panel", &load_panel, py::arg("csv_path"), py::arg("json_path"));
  m.def(
      "save_panel",
      [](const ObservationPanel& panel, const std::string& csv, const std::string& json) {
        save_panel(panel, csv, json);
      },
      py::arg("panel"), py::arg("csv_path"), py::arg("json_path"));
  m.def("empirical_report_frequency", &empirical_report_frequency, py::arg("panel"),
        py::arg("node"), py::arg("type"), py::arg("window"));
  m.def("carry_forward_ratings", &carry_forward_ratings, py::arg("panel"));
  m.def("subsample_ratings", &subsample_ratings, py::arg("panel"), py::arg("type"),
        py::arg("fraction"), py::arg("seed"), py::arg("window") = WeekWindow{0, 0});

  py::class_<FullSyntheticSpec>(m, "FullSyntheticSpec")
      .def(py::init<>())
      .def_readwrite("grid_rows", &FullSyntheticSpec::grid_rows)
      .def_readwrite("grid_cols", &FullSyntheticSpec::grid_cols)
      .def_readwrite("num_types", &FullSyntheticSpec::num_types)
      .def_readwrite("num_rated", &FullSyntheticSpec::num_rated)
      .def_readwrite("num_weeks", &FullSyntheticSpec::num_weeks)
      .def_readwrite("num_features", &FullSyntheticSpec::num_features)
      .def_readwrite("start_date", &FullSyntheticSpec::start_date)
      .def_readwrite("theta_mean", &FullSyntheticSpec::theta_mean)
      .def_readwrite("theta_sd", &FullSyntheticSpec::theta_sd)
      .def_readwrite("base_frequency_min", &FullSyntheticSpec::base_frequency_min)
      .def_readwrite("base_frequency_max", &FullSyntheticSpec::base_frequency_max)
      .def_readwrite("cell_logit_sd", &FullSyntheticSpec::cell_logit_sd)
      .def_readwrite("pattern_fraction", &FullSyntheticSpec::pattern_fraction)
      .def_readwrite("rating_week_prob", &FullSyntheticSpec::rating_week_prob)
      .def_readwrite("seed", &FullSyntheticSpec::seed);
  py::class_<FullSyntheticData>(m, "FullSyntheticData")
      .def_readonly("graph", &FullSyntheticData::graph)
      .def_readonly("demographics", &FullSyntheticData::demographics)
      .def_readonly("panel", &FullSyntheticData::panel);
  m.def("make_fully_synthetic", &make_fully_synthetic, py::arg("spec"));

  py::class_<VariantConfig>(m, "VariantConfig")
      .def_readonly("name", &VariantConfig::name)
      .def_property_readonly("gamma1",
                             [](const VariantConfig& v) { return v.weights.observed_bce; })
      .def_property_readonly("gamma2",
                             [](const VariantConfig& v) { return v.weights.rating_mse; })
      .def_property_readonly("gamma3",
                             [](const VariantConfig& v) { return v.weights.rating_reg; });
  m.def("variant_config", &variant_config, py::arg("name"));

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("variant", &TrainConfig::variant)
      .def_readwrite("subsampled_type", &TrainConfig::subsampled_type)
      .def_readwrite("validation", &TrainConfig::validation)
      .def_readwrite("hidden", &TrainConfig::hidden)
      .def_readwrite("emb_dim", &TrainConfig::emb_dim);

  py::class_<TrainedModel>(m, "TrainedModel")
      .def_readonly("selected_epoch", &TrainedModel::selected_epoch)
      .def_property_readonly("epochs",
                             [](const TrainedModel& t) { return t.history.size(); })
      .def("history_totals",
           [](const TrainedModel& t) {
             std::vector<double> totals;
             for (const auto& e : t.history) totals.push_back(e.total);
             return totals;
           })
      .def("predicted_ratings",
           [](TrainedModel& t, const SpatialGraph& graph) {
             const Eigen::MatrixXd emb = t.model.node_embedder.forward(
                 graph.normalized_adjacency(), ForwardMode::Eval);
             return t.model.rating_matrix(emb);
           })
      .def("predicted_report_probabilities",
           [](TrainedModel& t, const SpatialGraph& graph, const Demographics& demographics) {
             const Eigen::MatrixXd emb = t.model.node_embedder.forward(
                 graph.normalized_adjacency(), ForwardMode::Eval);
             const VariantConfig& v = t.variant;
             return report_probability_matrix(t.model.head, t.model.rating_matrix(emb),
                                              demographics.features,
                                              v.per_type_dispatch_for_all());
           })
      .def("reporting_coefficients",
           [](const TrainedModel& t, int type) {
             return py::make_tuple(t.model.head.alpha[type],
                                   Eigen::VectorXd(t.model.head.theta.row(type)));
           })
      .def("save_checkpoint", [](const TrainedModel& t, const std::string& path) {
        save_checkpoint(t.model, path);
      });
  m.def(
      "train",
      [](const ObservationPanel& panel, const Demographics& demographics,
         const SpatialGraph& graph, const SplitSpec& split, const TrainConfig& config) {
        return train(panel, demographics, graph, split, variant_config(config.variant),
                     config);
      },
      py::arg("panel"), py::arg("demographics"), py::arg("graph"), py::arg("split"),
      py::arg("config"));

  m.def("pair_correlation",
        [](const std::vector<double>& pred, const std::vector<double>& truth) {
          const auto c = pair_correlation(pred, truth);
          return py::make_tuple(c.defined, c.r, c.p_value);
        });
  m.def("pair_rmse", [](const std::vector<double>& pred, const std::vector<double>& truth) {
    return pair_rmse(pred, truth);
  });
  m.def("topk_coverage",
        [](const std::vector<double>& pred, const std::vector<double>& truth, int k) {
          return topk_coverage(pred, truth, k);
        });
  m.def("expected_calibration_error",
        [](const std::vector<double>& pred, const std::vector<double>& truth, int bins) {
          return expected_calibration_error(pred, truth, bins);
        },
        py::arg("pred"), py::arg("truth"), py::arg("bins") = 10);
  m.def(
      "kmeans",
      [](const Eigen::MatrixXd& points, int k, uint64_t seed, int restarts) {
        const KMeansResult r = kmeans(points, k, seed, restarts);
        return py::make_tuple(r.labels, r.inertia, r.degenerate);
      },
      py::arg("points"), py::arg("k"), py::arg("seed"), py::arg("restarts") = 50);

  // CLI-equivalent pipeline entry points driven by a config dict.
  m.def("run_ingest", [](const py::dict& d, const std::string& out) {
    return run_ingest(config_from_dict(d), out);
  });
  m.def("run_generate", [](const py::dict& d, const std::string& out) {
    return run_generate(config_from_dict(d), out);
  });
  m.def("run_train", [](const py::dict& d, const std::string& out) {
    return run_train(config_from_dict(d), out);
  });
  m.def("run_evaluate", [](const py::dict& d, const std::string& out) {
    return run_evaluate(config_from_dict(d), out);
  });
  m.def("run_cluster", [](const py::dict& d, const std::string& out) {
    return run_cluster(config_from_dict(d), out);
  });
  m.def("run_sweep", [](const py::dict& d, const std::string& out) {
    return run_sweep(config_from_dict(d), out);
  });
}
