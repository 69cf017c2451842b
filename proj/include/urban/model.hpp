#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstdint>
#include <string>
#include <vector>

#include "urban/graph.hpp"

namespace urban {

enum class ForwardMode { Train, Eval };

struct BatchNormParams {
  Eigen::VectorXd scale;
  Eigen::VectorXd shift;
};

struct BatchNormState {
  Eigen::VectorXd running_mean;
  Eigen::VectorXd running_var;
};

struct GcnLayer {
  Eigen::MatrixXd weight;  // fan_in x fan_out
  BatchNormParams bn;
  BatchNormState bn_state;
};

/// Intermediates kept by the forward pass; consumed by the backward pass.
struct EmbedderCache {
  Eigen::MatrixXd conv1, xhat1, normed1;   // pre-activation, normalized, layer output
  Eigen::MatrixXd conv2, xhat2;
  Eigen::MatrixXd propagated1;             // Ahat * normed1 (reused for dW2)
  Eigen::VectorXd inv_sd1, inv_sd2;        // 1/sqrt(var + eps) actually used
  ForwardMode mode = ForwardMode::Train;
};

/// Two rounds of graph convolution / leaky ReLU / batch normalization over
/// one-hot node inputs. Batch statistics are taken over the node dimension;
/// train mode uses batch statistics (optionally updating the running ones),
/// eval mode uses the running statistics.
struct NodeEmbedder {
  int n = 0;
  int hidden = 0;
  int emb_dim = 0;
  double leaky_slope = 0.01;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  GcnLayer layer1;  // n x hidden
  GcnLayer layer2;  // hidden x emb_dim

  Eigen::MatrixXd forward(const Eigen::SparseMatrix<double>& ahat, ForwardMode mode,
                          bool update_running_stats = false,
                          EmbedderCache* cache = nullptr);

  /// Gradients with respect to the embedder parameters given d(loss)/d(embeddings).
  struct Grads {
    Eigen::MatrixXd w1, w2;
    Eigen::VectorXd scale1, shift1, scale2, shift2;
  };
  Grads backward(const Eigen::SparseMatrix<double>& ahat, const EmbedderCache& cache,
                 const Eigen::MatrixXd& d_embeddings) const;
};

struct TypeEmbedder {
  Eigen::MatrixXd table;  // tau x emb_dim; row k is type k's embedding
};

struct MeanCoefficients {
  double alpha = 0.0;
  Eigen::VectorXd theta;
};

/// Per-type logistic reporting coefficients plus which types ever had an
/// observed rating. Means are always computed fresh from the current values.
struct ReportingHead {
  Eigen::VectorXd alpha;      // tau
  Eigen::MatrixXd theta;      // tau x (D+1), intercept last
  std::vector<uint8_t> rated;  // tau

  int num_rated() const;
  MeanCoefficients mean_coefficients() const;  // throws when nothing is rated
};

struct UrbanModel {
  NodeEmbedder node_embedder;
  TypeEmbedder type_embedder;
  ReportingHead head;

  int n() const { return node_embedder.n; }
  int tau() const { return static_cast<int>(type_embedder.table.rows()); }
  int feature_dim() const { return static_cast<int>(head.theta.cols()); }

  Eigen::MatrixXd node_embeddings(const Eigen::SparseMatrix<double>& ahat, ForwardMode mode,
                                  bool update_running_stats = false,
                                  EmbedderCache* cache = nullptr) {
    return node_embedder.forward(ahat, mode, update_running_stats, cache);
  }

  /// Predicted rating surface: embeddings * type table^T (n x tau).
  Eigen::MatrixXd rating_matrix(const Eigen::MatrixXd& embeddings) const {
    return embeddings * type_embedder.table.transpose();
  }
};

double predict_rating(const Eigen::MatrixXd& embeddings, const TypeEmbedder& types, int node,
                      int type);

/// Reporting-model dispatch: the case is a function of which observations
/// exist, never of rating values.
enum class ReportCase { ObservedRating = 1, RatedType = 2, UnratedType = 3 };

/// Case 1: an observed sub-node rating feeds the type's own coefficients.
double report_probability_observed(const ReportingHead& head, int type, double rating,
                                   const Eigen::VectorXd& features);

/// Cases 2/3: the predicted rating feeds either the type's own coefficients
/// (rated type) or the mean coefficients over rated types. When
/// `per_type_for_all` is set (reports-only training), every type uses its own
/// coefficients.
double report_probability_latent(const ReportingHead& head, int type, double predicted_rating,
                                 const Eigen::VectorXd& features,
                                 bool per_type_for_all = false);

/// n x tau matrix of node-level report probabilities from predicted ratings.
Eigen::MatrixXd report_probability_matrix(const ReportingHead& head,
                                          const Eigen::MatrixXd& pred_ratings,
                                          const Eigen::MatrixXd& features,
                                          bool per_type_for_all = false);

UrbanModel make_model(int n, int tau, int feature_dim, int hidden, int emb_dim,
                      const std::vector<uint8_t>& rated_types, uint64_t seed);

void save_checkpoint(const UrbanModel& model, const std::string& path);
UrbanModel load_checkpoint(const std::string& path);

}  // namespace urban
