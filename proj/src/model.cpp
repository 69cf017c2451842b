#include "urban/model.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "urban/rng.hpp"
#include "urban/stats.hpp"

namespace urban {

namespace {

Eigen::MatrixXd leaky_relu(const Eigen::MatrixXd& z, double slope) {
  return z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
}

// d(lrelu)/dz elementwise, using the cached pre-activation.
Eigen::MatrixXd leaky_relu_grad(const Eigen::MatrixXd& z, double slope) {
  return z.unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
}

struct BnForward {
  Eigen::MatrixXd xhat;
  Eigen::MatrixXd out;
  Eigen::VectorXd inv_sd;
};

BnForward batch_norm_forward(const Eigen::MatrixXd& a, GcnLayer& layer, double eps,
                             double momentum, ForwardMode mode, bool update_running) {
  BnForward res;
  const auto rows = static_cast<double>(a.rows());
  Eigen::VectorXd mu, var;
  if (mode == ForwardMode::Train) {
    mu = a.colwise().mean();
    var = ((a.rowwise() - mu.transpose()).array().square().colwise().sum() / rows).transpose();
    if (update_running) {
      layer.bn_state.running_mean =
          (1.0 - momentum) * layer.bn_state.running_mean + momentum * mu;
      layer.bn_state.running_var =
          (1.0 - momentum) * layer.bn_state.running_var + momentum * var;
    }
  } else {
    mu = layer.bn_state.running_mean;
    var = layer.bn_state.running_var;
  }
  res.inv_sd = (var.array() + eps).rsqrt();
  res.xhat = (a.rowwise() - mu.transpose()).array().rowwise() * res.inv_sd.transpose().array();
  res.out = (res.xhat.array().rowwise() * layer.bn.scale.transpose().array()).matrix();
  res.out.rowwise() += layer.bn.shift.transpose();
  return res;
}

}  // namespace

Eigen::MatrixXd NodeEmbedder::forward(const Eigen::SparseMatrix<double>& ahat,
                                      ForwardMode mode, bool update_running_stats,
                                      EmbedderCache* cache) {
  if (ahat.rows() != n || ahat.cols() != n)
    throw std::invalid_argument("node_embeddings: graph size does not match embedder");
  // One-hot node inputs make the first convolution Ahat * W1 directly.
  Eigen::MatrixXd conv1 = ahat * layer1.weight;
  Eigen::MatrixXd act1 = leaky_relu(conv1, leaky_slope);
  BnForward bn1 = batch_norm_forward(act1, layer1, bn_eps, bn_momentum, mode,
                                     update_running_stats);
  Eigen::MatrixXd propagated1 = ahat * bn1.out;
  Eigen::MatrixXd conv2 = propagated1 * layer2.weight;
  Eigen::MatrixXd act2 = leaky_relu(conv2, leaky_slope);
  BnForward bn2 = batch_norm_forward(act2, layer2, bn_eps, bn_momentum, mode,
                                     update_running_stats);
  if (cache != nullptr) {
    cache->conv1 = std::move(conv1);
    cache->xhat1 = std::move(bn1.xhat);
    cache->normed1 = bn1.out;
    cache->propagated1 = std::move(propagated1);
    cache->conv2 = std::move(conv2);
    cache->xhat2 = std::move(bn2.xhat);
    cache->inv_sd1 = std::move(bn1.inv_sd);
    cache->inv_sd2 = std::move(bn2.inv_sd);
    cache->mode = mode;
  }
  return bn2.out;
}

namespace {

// Backward through batch normalization over the node dimension.
// Train mode differentiates through the batch statistics.
Eigen::MatrixXd batch_norm_backward(const Eigen::MatrixXd& d_out,
                                    const Eigen::MatrixXd& xhat,
                                    const Eigen::VectorXd& inv_sd,
                                    const Eigen::VectorXd& scale, ForwardMode mode,
                                    Eigen::VectorXd& d_scale, Eigen::VectorXd& d_shift) {
  d_shift = d_out.colwise().sum();
  d_scale = (d_out.array() * xhat.array()).colwise().sum();
  Eigen::MatrixXd d_xhat = d_out.array().rowwise() * scale.transpose().array();
  if (mode == ForwardMode::Eval) {
    return d_xhat.array().rowwise() * inv_sd.transpose().array();
  }
  const double rows = static_cast<double>(d_out.rows());
  Eigen::RowVectorXd mean_dxhat = d_xhat.colwise().mean();
  Eigen::RowVectorXd mean_dxhat_xhat =
      (d_xhat.array() * xhat.array()).colwise().sum() / rows;
  Eigen::MatrixXd centered =
      (d_xhat.rowwise() - mean_dxhat) - (xhat.array().rowwise() * mean_dxhat_xhat.array()).matrix();
  return centered.array().rowwise() * inv_sd.transpose().array();
}

}  // namespace

NodeEmbedder::Grads NodeEmbedder::backward(const Eigen::SparseMatrix<double>& ahat,
                                           const EmbedderCache& cache,
                                           const Eigen::MatrixXd& d_embeddings) const {
  Grads g;
  Eigen::MatrixXd d_act2 = batch_norm_backward(d_embeddings, cache.xhat2, cache.inv_sd2,
                                               layer2.bn.scale, cache.mode, g.scale2,
                                               g.shift2);
  Eigen::MatrixXd d_conv2 =
      (d_act2.array() * leaky_relu_grad(cache.conv2, leaky_slope).array()).matrix();
  g.w2 = cache.propagated1.transpose() * d_conv2;
  Eigen::MatrixXd d_normed1 = ahat * (d_conv2 * layer2.weight.transpose());
  Eigen::MatrixXd d_act1 = batch_norm_backward(d_normed1, cache.xhat1, cache.inv_sd1,
                                               layer1.bn.scale, cache.mode, g.scale1,
                                               g.shift1);
  Eigen::MatrixXd d_conv1 =
      (d_act1.array() * leaky_relu_grad(cache.conv1, leaky_slope).array()).matrix();
  g.w1 = ahat * d_conv1;  // Ahat is symmetric
  return g;
}

int ReportingHead::num_rated() const {
  int count = 0;
  for (uint8_t r : rated) count += r;
  return count;
}

MeanCoefficients ReportingHead::mean_coefficients() const {
  const int r = num_rated();
  if (r == 0) throw std::runtime_error("mean_coefficients: no rated types");
  MeanCoefficients m;
  m.theta = Eigen::VectorXd::Zero(theta.cols());
  for (int k = 0; k < alpha.size(); ++k) {
    if (!rated[k]) continue;
    m.alpha += alpha[k];
    m.theta += theta.row(k);
  }
  m.alpha /= r;
  m.theta /= r;
  return m;
}

double predict_rating(const Eigen::MatrixXd& embeddings, const TypeEmbedder& types, int node,
                      int type) {
  if (node < 0 || node >= embeddings.rows() || type < 0 || type >= types.table.rows())
    throw std::out_of_range("predict_rating: index out of range");
  return embeddings.row(node).dot(types.table.row(type));
}

namespace {

// Sigmoid underflows to exactly 0/1 past |u| ~ 745; predictions stay in the
// open interval.
double probability(double u) {
  return std::clamp(sigmoid(u), std::numeric_limits<double>::min(),
                    1.0 - std::numeric_limits<double>::epsilon() / 2);
}

}  // namespace

double report_probability_observed(const ReportingHead& head, int type, double rating,
                                   const Eigen::VectorXd& features) {
  return probability(head.alpha[type] * rating + head.theta.row(type).dot(features));
}

double report_probability_latent(const ReportingHead& head, int type, double predicted_rating,
                                 const Eigen::VectorXd& features, bool per_type_for_all) {
  if (per_type_for_all || head.rated[type])
    return probability(head.alpha[type] * predicted_rating +
                       head.theta.row(type).dot(features));
  const MeanCoefficients m = head.mean_coefficients();
  return probability(m.alpha * predicted_rating + m.theta.dot(features));
}

Eigen::MatrixXd report_probability_matrix(const ReportingHead& head,
                                          const Eigen::MatrixXd& pred_ratings,
                                          const Eigen::MatrixXd& features,
                                          bool per_type_for_all) {
  const auto n = pred_ratings.rows();
  const auto tau = pred_ratings.cols();
  Eigen::MatrixXd theta_x = features * head.theta.transpose();  // n x tau
  Eigen::MatrixXd probs(n, tau);
  const bool need_means = !per_type_for_all && head.num_rated() > 0 &&
                          head.num_rated() < static_cast<int>(head.rated.size());
  MeanCoefficients means;
  Eigen::VectorXd mean_theta_x;
  if (need_means) {
    means = head.mean_coefficients();
    mean_theta_x = features * means.theta;
  }
  for (Eigen::Index k = 0; k < tau; ++k) {
    const bool own = per_type_for_all || head.rated[k];
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = own ? head.alpha[k] * pred_ratings(i, k) + theta_x(i, k)
                           : means.alpha * pred_ratings(i, k) + mean_theta_x(i);
      probs(i, k) = probability(u);
    }
  }
  return probs;
}

UrbanModel make_model(int n, int tau, int feature_dim, int hidden, int emb_dim,
                      const std::vector<uint8_t>& rated_types, uint64_t seed) {
  if (static_cast<int>(rated_types.size()) != tau)
    throw std::invalid_argument("make_model: rated mask size mismatch");
  UrbanModel model;
  auto& ne = model.node_embedder;
  ne.n = n;
  ne.hidden = hidden > 0 ? hidden : n;
  ne.emb_dim = emb_dim;
  auto rng = substream(seed, "init");
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto fill = [&](Eigen::MatrixXd& m, int in, int out, double fan_in) {
    m.resize(in, out);
    const double sd = 1.0 / std::sqrt(fan_in);
    for (int i = 0; i < in; ++i)
      for (int j = 0; j < out; ++j) m(i, j) = sd * gauss(rng);
  };
  fill(ne.layer1.weight, n, ne.hidden, n);
  fill(ne.layer2.weight, ne.hidden, emb_dim, ne.hidden);
  ne.layer1.bn.scale = Eigen::VectorXd::Ones(ne.hidden);
  ne.layer1.bn.shift = Eigen::VectorXd::Zero(ne.hidden);
  ne.layer1.bn_state.running_mean = Eigen::VectorXd::Zero(ne.hidden);
  ne.layer1.bn_state.running_var = Eigen::VectorXd::Ones(ne.hidden);
  ne.layer2.bn.scale = Eigen::VectorXd::Ones(emb_dim);
  ne.layer2.bn.shift = Eigen::VectorXd::Zero(emb_dim);
  ne.layer2.bn_state.running_mean = Eigen::VectorXd::Zero(emb_dim);
  ne.layer2.bn_state.running_var = Eigen::VectorXd::Ones(emb_dim);
  fill(model.type_embedder.table, tau, emb_dim, tau);
  // Zero head: the initial reporting model predicts 0.5 everywhere.
  model.head.alpha = Eigen::VectorXd::Zero(tau);
  model.head.theta = Eigen::MatrixXd::Zero(tau, feature_dim);
  model.head.rated = rated_types;
  return model;
}

namespace {

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
}

Eigen::MatrixXd read_matrix(std::ifstream& in, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      double v;
      in.read(reinterpret_cast<char*>(&v), sizeof(double));
      m(i, j) = v;
    }
  if (!in) throw std::runtime_error("checkpoint: truncated tensor data");
  return m;
}

constexpr char kMagic[8] = {'U', 'R', 'B', 'N', 'C', 'K', 'P', 'T'};

}  // namespace

void save_checkpoint(const UrbanModel& model, const std::string& path) {
  nlohmann::ordered_json header;
  header["version"] = 1;
  header["n"] = model.node_embedder.n;
  header["hidden"] = model.node_embedder.hidden;
  header["emb_dim"] = model.node_embedder.emb_dim;
  header["tau"] = model.tau();
  header["feature_dim"] = model.feature_dim();
  header["leaky_slope"] = model.node_embedder.leaky_slope;
  header["bn_momentum"] = model.node_embedder.bn_momentum;
  header["bn_eps"] = model.node_embedder.bn_eps;
  header["rated"] = model.head.rated;
  header["tensors"] = {"w1", "bn1_scale", "bn1_shift", "bn1_mean", "bn1_var",
                       "w2", "bn2_scale", "bn2_shift", "bn2_mean", "bn2_var",
                       "type_table", "alpha", "theta"};
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  const uint64_t len = header_str.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header_str.data(), static_cast<std::streamsize>(len));
  const auto& ne = model.node_embedder;
  write_matrix(out, ne.layer1.weight);
  write_matrix(out, ne.layer1.bn.scale);
  write_matrix(out, ne.layer1.bn.shift);
  write_matrix(out, ne.layer1.bn_state.running_mean);
  write_matrix(out, ne.layer1.bn_state.running_var);
  write_matrix(out, ne.layer2.weight);
  write_matrix(out, ne.layer2.bn.scale);
  write_matrix(out, ne.layer2.bn.shift);
  write_matrix(out, ne.layer2.bn_state.running_mean);
  write_matrix(out, ne.layer2.bn_state.running_var);
  write_matrix(out, model.type_embedder.table);
  write_matrix(out, model.head.alpha);
  write_matrix(out, model.head.theta);
}

UrbanModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header_str(len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(len));
  const auto header = nlohmann::json::parse(header_str);
  if (header.at("version").get<int>() != 1)
    throw std::runtime_error("checkpoint: unsupported version");

  UrbanModel model;
  auto& ne = model.node_embedder;
  ne.n = header.at("n").get<int>();
  ne.hidden = header.at("hidden").get<int>();
  ne.emb_dim = header.at("emb_dim").get<int>();
  ne.leaky_slope = header.at("leaky_slope").get<double>();
  ne.bn_momentum = header.at("bn_momentum").get<double>();
  ne.bn_eps = header.at("bn_eps").get<double>();
  const int tau = header.at("tau").get<int>();
  const int fdim = header.at("feature_dim").get<int>();
  model.head.rated = header.at("rated").get<std::vector<uint8_t>>();

  ne.layer1.weight = read_matrix(in, ne.n, ne.hidden);
  ne.layer1.bn.scale = read_matrix(in, ne.hidden, 1);
  ne.layer1.bn.shift = read_matrix(in, ne.hidden, 1);
  ne.layer1.bn_state.running_mean = read_matrix(in, ne.hidden, 1);
  ne.layer1.bn_state.running_var = read_matrix(in, ne.hidden, 1);
  ne.layer2.weight = read_matrix(in, ne.hidden, ne.emb_dim);
  ne.layer2.bn.scale = read_matrix(in, ne.emb_dim, 1);
  ne.layer2.bn.shift = read_matrix(in, ne.emb_dim, 1);
  ne.layer2.bn_state.running_mean = read_matrix(in, ne.emb_dim, 1);
  ne.layer2.bn_state.running_var = read_matrix(in, ne.emb_dim, 1);
  model.type_embedder.table = read_matrix(in, tau, ne.emb_dim);
  model.head.alpha = read_matrix(in, tau, 1);
  model.head.theta = read_matrix(in, tau, fdim);
  return model;
}

}  // namespace urban
