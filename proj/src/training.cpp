#include "urban/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "urban/rng.hpp"
#include "urban/stats.hpp"

namespace urban {

TrainingRows extract_training_rows(const ObservationPanel& panel, const WeekWindow& window,
                                   bool ignore_ratings) {
  TrainingRows rows;
  rows.observed.observed = true;
  rows.unobserved.observed = false;
  const int tau = panel.tau();

  std::vector<uint8_t> rated_cell;
  if (!ignore_ratings) {
    rated_cell.assign(panel.node_reports.size(), 0);
    for (const auto& r : panel.ratings) {
      if (r.week < window.begin || r.week >= window.end) continue;
      rated_cell[panel.cell_index(r.node, r.type, r.week)] = 1;
      rows.observed.node.push_back(r.node);
      rows.observed.type.push_back(r.type);
      rows.observed.week.push_back(r.week);
      rows.observed.label.push_back(r.report);
      rows.observed.rating.push_back(r.rating);
    }
  }
  for (int i = 0; i < panel.n; ++i)
    for (int k = 0; k < tau; ++k)
      for (int t = window.begin; t < window.end; ++t) {
        if (!ignore_ratings && rated_cell[panel.cell_index(i, k, t)]) continue;
        rows.unobserved.node.push_back(i);
        rows.unobserved.type.push_back(k);
        rows.unobserved.week.push_back(t);
        rows.unobserved.label.push_back(panel.report(i, k, t));
      }
  return rows;
}

namespace {

BatchRows slice_rows(const BatchRows& pool, const std::vector<size_t>& order, size_t begin,
                     size_t end) {
  BatchRows b;
  b.observed = pool.observed;
  b.node.reserve(end - begin);
  for (size_t j = begin; j < end; ++j) {
    const size_t idx = order[j];
    b.node.push_back(pool.node[idx]);
    b.type.push_back(pool.type[idx]);
    b.week.push_back(pool.week[idx]);
    b.label.push_back(pool.label[idx]);
    if (pool.observed) b.rating.push_back(pool.rating[idx]);
  }
  return b;
}

std::vector<size_t> shuffled_indices(size_t count, std::mt19937_64& rng) {
  std::vector<size_t> order(count);
  for (size_t i = 0; i < count; ++i) order[i] = i;
  for (size_t i = count; i > 1; --i) {
    std::uniform_int_distribution<size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  return order;
}

}  // namespace

std::vector<BatchRows> build_batches(const TrainingRows& rows, int batch_size, uint64_t seed,
                                     uint64_t epoch) {
  if (batch_size < 1) throw std::invalid_argument("build_batches: batch size must be >= 1");
  std::vector<BatchRows> batches;
  auto chunk_pool = [&](const BatchRows& pool, std::string_view stream) {
    if (pool.size() == 0) return;
    auto rng = substream(seed, stream, epoch);
    const auto order = shuffled_indices(pool.size(), rng);
    for (size_t begin = 0; begin < pool.size(); begin += batch_size) {
      const size_t end = std::min(pool.size(), begin + batch_size);
      batches.push_back(slice_rows(pool, order, begin, end));
    }
  };
  chunk_pool(rows.observed, "batch_observed");
  chunk_pool(rows.unobserved, "batch_unobserved");
  // Interleave observed and unobserved batches within the epoch.
  auto rng = substream(seed, "batch_order", epoch);
  for (size_t i = batches.size(); i > 1; --i) {
    std::uniform_int_distribution<size_t> pick(0, i - 1);
    std::swap(batches[i - 1], batches[pick(rng)]);
  }
  return batches;
}

std::vector<BatchRows> build_batches(const ObservationPanel& panel, const WeekWindow& window,
                                     int batch_size, uint64_t seed, uint64_t epoch) {
  return build_batches(extract_training_rows(panel, window), batch_size, seed, epoch);
}

StepResult compute_step(UrbanModel& model, const Eigen::SparseMatrix<double>& ahat,
                        const Eigen::MatrixXd& features, const BatchRows& batch,
                        const VariantConfig& variant, int subsampled_type,
                        ForwardMode mode, bool update_running_stats, ModelGrads* grads) {
  const auto& weights = variant.weights;
  const int n = model.n();
  const int tau = model.tau();
  EmbedderCache cache;
  const Eigen::MatrixXd emb =
      model.node_embedder.forward(ahat, mode, update_running_stats, grads ? &cache : nullptr);
  const Eigen::MatrixXd pred_rating = model.rating_matrix(emb);  // n x tau

  const bool use_unobs_bce = !batch.observed && variant.unobs_weight > 0.0 &&
                             variant.head_policy != HeadLearning::Unused;
  const bool use_obs_bce = batch.observed && weights.observed_bce > 0.0 &&
                           variant.head_policy != HeadLearning::Unused;
  Eigen::MatrixXd theta_x;
  if (use_unobs_bce || use_obs_bce) theta_x = features * model.head.theta.transpose();

  const bool per_type_all = variant.per_type_dispatch_for_all();
  MeanCoefficients means;
  Eigen::VectorXd mean_theta_x;
  bool need_means = false;
  if (use_unobs_bce && !per_type_all) {
    for (int k : batch.type)
      if (!model.head.rated[k]) {
        need_means = true;
        break;
      }
    if (need_means) {
      means = model.head.mean_coefficients();
      mean_theta_x = features * means.theta;
    }
  }

  LossComponents components;
  Eigen::MatrixXd d_pred = Eigen::MatrixXd::Zero(n, tau);  // dL/d r_hat
  Eigen::MatrixXd g_per_type = Eigen::MatrixXd::Zero(n, tau);  // dL/du, own coefficients
  Eigen::VectorXd g_mean = Eigen::VectorXd::Zero(n);           // dL/du via mean coefficients
  Eigen::VectorXd d_alpha = Eigen::VectorXd::Zero(tau);
  double d_alpha_mean = 0.0;
  bool any_mean_rows = false;

  const size_t rows = batch.size();
  if (batch.observed) {
    if (batch.rating.size() != rows)
      throw std::invalid_argument("compute_step: observed batch missing ratings");
    for (size_t j = 0; j < rows; ++j) {
      const int i = batch.node[j];
      const int k = batch.type[j];
      const double truth = batch.rating[j];
      if (use_obs_bce) {
        const double u = model.head.alpha[k] * truth + theta_x(i, k);
        const double p = sigmoid(u);
        components.obs += bce_term(p, batch.label[j]);
        const double g = weights.observed_bce * (p - batch.label[j]);
        g_per_type(i, k) += g;
        d_alpha[k] += g * truth;
      }
      const double err = pred_rating(i, k) - truth;
      components.rating += err * err;
      d_pred(i, k) += weights.rating_mse * 2.0 * err;
    }
  } else {
    for (size_t j = 0; j < rows; ++j) {
      const int i = batch.node[j];
      const int k = batch.type[j];
      const double rhat = pred_rating(i, k);
      if (use_unobs_bce) {
        const bool own = per_type_all || model.head.rated[k];
        const double u = own ? model.head.alpha[k] * rhat + theta_x(i, k)
                             : means.alpha * rhat + mean_theta_x(i);
        const double p = sigmoid(u);
        components.unobs += bce_term(p, batch.label[j]);
        const double g = variant.unobs_weight * (p - batch.label[j]);
        if (own) {
          g_per_type(i, k) += g;
          d_alpha[k] += g * rhat;
          d_pred(i, k) += model.head.alpha[k] * g;
        } else {
          g_mean(i) += g;
          d_alpha_mean += g * rhat;
          d_pred(i, k) += means.alpha * g;
          any_mean_rows = true;
        }
      }
      components.reg += rhat * rhat;
      d_pred(i, k) += weights.rating_reg * 2.0 * rhat;
    }
  }

  if (subsampled_type >= 0) {
    const auto d = model.head.theta.cols();
    components.theta_reg = model.head.theta.row(subsampled_type).head(d - 1).squaredNorm();
    components.alpha_relu = std::max(0.0, model.head.alpha[subsampled_type]);
  }

  StepResult result;
  result.components = components;
  result.total = total_loss(components, weights, variant.unobs_weight);

  if (grads != nullptr) {
    grads->theta = g_per_type.transpose() * features;  // tau x (D+1)
    grads->alpha = d_alpha;
    if (any_mean_rows) {
      // Mean coefficients distribute their gradient over the rated types.
      const double r = model.head.num_rated();
      const Eigen::VectorXd theta_share = (features.transpose() * g_mean) / r;
      for (int k = 0; k < tau; ++k) {
        if (!model.head.rated[k]) continue;
        grads->theta.row(k) += theta_share.transpose();
        grads->alpha[k] += d_alpha_mean / r;
      }
    }
    if (subsampled_type >= 0) {
      const auto d = model.head.theta.cols();
      grads->theta.row(subsampled_type).head(d - 1) +=
          weights.theta_reg * 2.0 * model.head.theta.row(subsampled_type).head(d - 1);
      if (model.head.alpha[subsampled_type] > 0.0)
        grads->alpha[subsampled_type] += weights.alpha_relu;
    }
    grads->type_table = d_pred.transpose() * emb;
    const Eigen::MatrixXd d_emb = d_pred * model.type_embedder.table;
    grads->embedder = model.node_embedder.backward(ahat, cache, d_emb);
  }
  return result;
}

double head_gradient_scale(const VariantConfig& variant, bool batch_observed, int type,
                           int subsampled_type) {
  if (batch_observed) return 1.0;
  switch (variant.head_policy) {
    case HeadLearning::AllTypesAllRows:
      return 1.0;
    case HeadLearning::Unused:
      return 0.0;
    case HeadLearning::RatedTypesObservedRows:
      return type == subsampled_type ? variant.unobserved_head_gradient : 0.0;
  }
  return 0.0;
}

namespace {

struct AdamTensor {
  Eigen::MatrixXd m, v;
};

struct AdamState {
  std::vector<AdamTensor> tensors;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename ParamT, typename GradT>
void adam_apply(ParamT& param, const GradT& grad, AdamTensor& state, const AdamState& cfg,
                double lr, double bias1, double bias2) {
  if (state.m.size() == 0) {
    state.m = Eigen::MatrixXd::Zero(param.rows(), param.cols());
    state.v = Eigen::MatrixXd::Zero(param.rows(), param.cols());
  }
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = (cfg.beta2 * state.v.array() + (1.0 - cfg.beta2) * grad.array().square()).matrix();
  param.array() -=
      lr * (state.m.array() / bias1) / ((state.v.array() / bias2).sqrt() + cfg.eps);
}

void adam_step(UrbanModel& model, const ModelGrads& grads, AdamState& state, double lr) {
  if (state.tensors.empty()) state.tensors.resize(9);
  state.step += 1;
  const double bias1 = 1.0 - std::pow(state.beta1, state.step);
  const double bias2 = 1.0 - std::pow(state.beta2, state.step);
  auto& ne = model.node_embedder;
  adam_apply(ne.layer1.weight, grads.embedder.w1, state.tensors[0], state, lr, bias1, bias2);
  adam_apply(ne.layer1.bn.scale, grads.embedder.scale1, state.tensors[1], state, lr, bias1, bias2);
  adam_apply(ne.layer1.bn.shift, grads.embedder.shift1, state.tensors[2], state, lr, bias1, bias2);
  adam_apply(ne.layer2.weight, grads.embedder.w2, state.tensors[3], state, lr, bias1, bias2);
  adam_apply(ne.layer2.bn.scale, grads.embedder.scale2, state.tensors[4], state, lr, bias1, bias2);
  adam_apply(ne.layer2.bn.shift, grads.embedder.shift2, state.tensors[5], state, lr, bias1, bias2);
  adam_apply(model.type_embedder.table, grads.type_table, state.tensors[6], state, lr, bias1, bias2);
  adam_apply(model.head.alpha, grads.alpha, state.tensors[7], state, lr, bias1, bias2);
  adam_apply(model.head.theta, grads.theta, state.tensors[8], state, lr, bias1, bias2);
}

double validation_score(UrbanModel& model, const Eigen::SparseMatrix<double>& ahat,
                        const Eigen::MatrixXd& features, const ObservationPanel& panel,
                        const WeekWindow& val_weeks, const VariantConfig& variant) {
  const Eigen::MatrixXd emb = model.node_embedder.forward(ahat, ForwardMode::Eval);
  const Eigen::MatrixXd pred_rating = model.rating_matrix(emb);
  double score = 0.0;
  int parts = 0;

  if (variant.head_policy != HeadLearning::Unused) {
    const Eigen::MatrixXd pred_report = report_probability_matrix(
        model.head, pred_rating, features, variant.per_type_dispatch_for_all());
    double sum = 0.0;
    int defined = 0;
    for (int k = 0; k < panel.tau(); ++k) {
      std::vector<double> pred, truth;
      pred.reserve(panel.n);
      for (int i = 0; i < panel.n; ++i) {
        pred.push_back(pred_report(i, k));
        truth.push_back(empirical_report_frequency(panel, i, k, val_weeks));
      }
      const auto corr = pearson(pred, truth);
      if (corr.defined) {
        sum += corr.r;
        ++defined;
      }
    }
    if (defined > 0) {
      score += sum / defined;
      ++parts;
    }
  }

  // Rating correlation against mean observed ratings in the validation weeks.
  std::map<std::pair<int, int>, std::pair<double, int>> cell_truth;
  for (const auto& r : panel.ratings) {
    if (r.week < val_weeks.begin || r.week >= val_weeks.end) continue;
    auto& acc = cell_truth[{r.type, r.node}];
    acc.first += r.rating;
    acc.second += 1;
  }
  if (!cell_truth.empty()) {
    std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_type;
    for (const auto& [key, acc] : cell_truth) {
      by_type[key.first].first.push_back(pred_rating(key.second, key.first));
      by_type[key.first].second.push_back(acc.first / acc.second);
    }
    double sum = 0.0;
    int defined = 0;
    for (const auto& [k, vecs] : by_type) {
      const auto corr = pearson(vecs.first, vecs.second);
      if (corr.defined) {
        sum += corr.r;
        ++defined;
      }
    }
    if (defined > 0) {
      score += sum / defined;
      ++parts;
    }
  }
  return parts > 0 ? score / parts : 0.0;
}

}  // namespace

TrainedModel train(const ObservationPanel& panel, const Demographics& demographics,
                   const SpatialGraph& graph, const SplitSpec& split,
                   const VariantConfig& variant, const TrainConfig& config) {
  if (graph.n != panel.n || demographics.n() != panel.n)
    throw std::invalid_argument("train: node count mismatch between inputs");
  const long start_day = panel.start_day();
  const bool use_validation = config.validation == "best" && split.has_validation();
  const WeekWindow fit_weeks = weeks_in_months(
      start_day, panel.num_weeks, split.train_start,
      use_validation ? split.effective_train_end() : split.train_end);
  const WeekWindow val_weeks =
      use_validation
          ? weeks_in_months(start_day, panel.num_weeks, split.val_start, split.val_end)
          : WeekWindow{0, 0};
  if (fit_weeks.empty()) throw std::invalid_argument("train: empty training window");

  const bool ignore_ratings = variant.name == "reports_only";
  const TrainingRows rows = extract_training_rows(panel, fit_weeks, ignore_ratings);
  if (!ignore_ratings && variant.head_policy == HeadLearning::RatedTypesObservedRows &&
      rows.observed.size() == 0 && variant.weights.rating_mse > 0.0)
    std::cerr << "train: variant '" << variant.name
              << "' expects observed ratings but none are in the window\n";

  std::vector<uint8_t> rated = panel.rated_type_mask(fit_weeks);
  if (ignore_ratings) std::fill(rated.begin(), rated.end(), 0);

  UrbanModel model = make_model(panel.n, panel.tau(), demographics.dim(), config.hidden,
                                config.emb_dim, rated, config.seed);
  const Eigen::SparseMatrix<double> ahat = graph.normalized_adjacency();
  const Eigen::MatrixXd& features = demographics.features;

  std::ofstream component_log;
  if (!config.component_log.empty()) {
    component_log.open(config.component_log);
    if (!component_log)
      throw std::runtime_error("train: cannot write component log " + config.component_log);
  }

  TrainedModel out;
  out.variant = variant;
  AdamState adam;
  UrbanModel best_model = model;
  double best_score = -std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  long step = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto batches = build_batches(rows, config.batch_size, config.seed, epoch);
    EpochStats stats;
    stats.epoch = epoch;
    for (const auto& batch : batches) {
      ModelGrads grads;
      const StepResult step_result = compute_step(model, ahat, features, batch, variant,
                                                  config.subsampled_type, ForwardMode::Train,
                                                  /*update_running_stats=*/true, &grads);
      if (!std::isfinite(step_result.total)) {
        const auto& c = step_result.components;
        throw std::runtime_error(
            "train: non-finite loss at epoch " + std::to_string(epoch) + " (unobs=" +
            std::to_string(c.unobs) + " obs=" + std::to_string(c.obs) + " rating=" +
            std::to_string(c.rating) + " reg=" + std::to_string(c.reg) + ")");
      }
      if (!batch.observed) {
        for (int k = 0; k < model.tau(); ++k) {
          const double s = head_gradient_scale(variant, false, k, config.subsampled_type);
          if (s != 1.0) {
            grads.theta.row(k) *= s;
            grads.alpha[k] *= s;
          }
        }
      }
      adam_step(model, grads, adam, config.learning_rate);
      stats.components.unobs += step_result.components.unobs;
      stats.components.obs += step_result.components.obs;
      stats.components.rating += step_result.components.rating;
      stats.components.reg += step_result.components.reg;
      stats.components.theta_reg += step_result.components.theta_reg;
      stats.components.alpha_relu += step_result.components.alpha_relu;
      stats.total += step_result.total;
      if (component_log.is_open()) {
        nlohmann::ordered_json line;
        line["step"] = step;
        line["variant"] = variant.name;
        line["unobs"] = step_result.components.unobs;
        line["obs"] = step_result.components.obs;
        line["rating"] = step_result.components.rating;
        line["reg"] = step_result.components.reg;
        line["theta_reg"] = step_result.components.theta_reg;
        line["alpha_relu"] = step_result.components.alpha_relu;
        line["total"] = step_result.total;
        component_log << line.dump() << "\n";
      }
      ++step;
    }
    if (use_validation) {
      stats.validation_score =
          validation_score(model, ahat, features, panel, val_weeks, variant);
      if (stats.validation_score > best_score) {
        best_score = stats.validation_score;
        best_model = model;
        best_epoch = epoch;
      }
    }
    out.history.push_back(stats);
  }

  if (use_validation && best_epoch >= 0) {
    out.model = std::move(best_model);
    out.selected_epoch = best_epoch;
  } else {
    out.model = std::move(model);
    out.selected_epoch = config.epochs - 1;
  }
  return out;
}

Eigen::VectorXd pack_parameters(const UrbanModel& model) {
  const auto& ne = model.node_embedder;
  std::vector<const Eigen::MatrixXd*> mats = {&ne.layer1.weight, &ne.layer2.weight,
                                              &model.type_embedder.table, &model.head.theta};
  std::vector<const Eigen::VectorXd*> vecs = {&ne.layer1.bn.scale, &ne.layer1.bn.shift,
                                              &ne.layer2.bn.scale, &ne.layer2.bn.shift,
                                              &model.head.alpha};
  Eigen::Index total = 0;
  for (auto* m : mats) total += m->size();
  for (auto* v : vecs) total += v->size();
  Eigen::VectorXd packed(total);
  Eigen::Index at = 0;
  for (auto* m : mats) {
    packed.segment(at, m->size()) = Eigen::Map<const Eigen::VectorXd>(m->data(), m->size());
    at += m->size();
  }
  for (auto* v : vecs) {
    packed.segment(at, v->size()) = *v;
    at += v->size();
  }
  return packed;
}

void unpack_parameters(UrbanModel& model, const Eigen::VectorXd& packed) {
  auto& ne = model.node_embedder;
  std::vector<Eigen::MatrixXd*> mats = {&ne.layer1.weight, &ne.layer2.weight,
                                        &model.type_embedder.table, &model.head.theta};
  std::vector<Eigen::VectorXd*> vecs = {&ne.layer1.bn.scale, &ne.layer1.bn.shift,
                                        &ne.layer2.bn.scale, &ne.layer2.bn.shift,
                                        &model.head.alpha};
  Eigen::Index at = 0;
  for (auto* m : mats) {
    Eigen::Map<Eigen::VectorXd>(m->data(), m->size()) = packed.segment(at, m->size());
    at += m->size();
  }
  for (auto* v : vecs) {
    *v = packed.segment(at, v->size());
    at += v->size();
  }
}

Eigen::VectorXd pack_gradients(const ModelGrads& grads) {
  std::vector<const Eigen::MatrixXd*> mats = {&grads.embedder.w1, &grads.embedder.w2,
                                              &grads.type_table, &grads.theta};
  std::vector<const Eigen::VectorXd*> vecs = {&grads.embedder.scale1, &grads.embedder.shift1,
                                              &grads.embedder.scale2, &grads.embedder.shift2,
                                              &grads.alpha};
  Eigen::Index total = 0;
  for (auto* m : mats) total += m->size();
  for (auto* v : vecs) total += v->size();
  Eigen::VectorXd packed(total);
  Eigen::Index at = 0;
  for (auto* m : mats) {
    packed.segment(at, m->size()) = Eigen::Map<const Eigen::VectorXd>(m->data(), m->size());
    at += m->size();
  }
  for (auto* v : vecs) {
    packed.segment(at, v->size()) = *v;
    at += v->size();
  }
  return packed;
}

double max_relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double denom = std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric[i]));
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

GradientCheckResult gradient_check(UrbanModel model, const Eigen::SparseMatrix<double>& ahat,
                                   const Eigen::MatrixXd& features, const BatchRows& batch,
                                   const VariantConfig& variant, int subsampled_type,
                                   double eps) {
  GradientCheckResult result;
  ModelGrads grads;
  compute_step(model, ahat, features, batch, variant, subsampled_type, ForwardMode::Train,
               false, &grads);
  result.analytic = pack_gradients(grads);

  Eigen::VectorXd packed = pack_parameters(model);
  result.numeric.resize(packed.size());
  auto loss_at = [&](const Eigen::VectorXd& p) {
    unpack_parameters(model, p);
    return compute_step(model, ahat, features, batch, variant, subsampled_type,
                        ForwardMode::Train, false, nullptr)
        .total;
  };
  for (Eigen::Index i = 0; i < packed.size(); ++i) {
    const double keep = packed[i];
    packed[i] = keep + eps;
    const double up = loss_at(packed);
    packed[i] = keep - eps;
    const double down = loss_at(packed);
    packed[i] = keep;
    result.numeric[i] = (up - down) / (2.0 * eps);
  }
  unpack_parameters(model, packed);
  result.max_relative_error = max_relative_error(result.analytic, result.numeric);
  return result;
}

}  // namespace urban
