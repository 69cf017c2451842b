#include <doctest.h>

#include <filesystem>
#include <random>

#include "urban/model.hpp"
#include "urban/rng.hpp"
#include "urban/stats.hpp"

using namespace urban;

namespace {

UrbanModel random_model(int n, int tau, int fdim, int hidden, int emb, uint64_t seed,
                        int rated_count) {
  std::vector<uint8_t> rated(tau, 0);
  for (int k = 0; k < rated_count; ++k) rated[k] = 1;
  UrbanModel model = make_model(n, tau, fdim, hidden, emb, rated, seed);
  auto rng = substream(seed, "head_fixture");
  std::normal_distribution<double> gauss(0.0, 0.3);
  for (int k = 0; k < tau; ++k) {
    model.head.alpha[k] = gauss(rng);
    for (int j = 0; j < fdim; ++j) model.head.theta(k, j) = gauss(rng);
  }
  return model;
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("singleton graph reduces to two leaky relus") {
  // One self-looped node: Ahat = 1. Identity-free setup with bn disabled
  // (eps 0, eval mode, unit running stats) gives lrelu(lrelu(w)).
  for (double w : {0.7, -0.4}) {
    NodeEmbedder ne;
    ne.n = 1;
    ne.hidden = 1;
    ne.emb_dim = 1;
    ne.bn_eps = 0.0;
    ne.layer1.weight = Eigen::MatrixXd::Constant(1, 1, w);
    ne.layer2.weight = Eigen::MatrixXd::Constant(1, 1, 1.0);
    for (auto* layer : {&ne.layer1, &ne.layer2}) {
      layer->bn.scale = Eigen::VectorXd::Ones(1);
      layer->bn.shift = Eigen::VectorXd::Zero(1);
      layer->bn_state.running_mean = Eigen::VectorXd::Zero(1);
      layer->bn_state.running_var = Eigen::VectorXd::Ones(1);
    }
    SpatialGraph g;
    g.n = 1;
    const auto emb = ne.forward(g.normalized_adjacency(), ForwardMode::Eval);
    auto lrelu = [](double v) { return v > 0 ? v : 0.01 * v; };
    CHECK(emb(0, 0) == doctest::Approx(lrelu(lrelu(w))).epsilon(1e-12));
  }
}

TEST_CASE("zero weights propagate the bn shift") {
  NodeEmbedder ne;
  ne.n = 3;
  ne.hidden = 2;
  ne.emb_dim = 2;
  ne.layer1.weight = Eigen::MatrixXd::Zero(3, 2);
  ne.layer2.weight = Eigen::MatrixXd::Zero(2, 2);
  for (auto* layer : {&ne.layer1, &ne.layer2}) {
    const int width = layer == &ne.layer1 ? 2 : 2;
    layer->bn.scale = Eigen::VectorXd::Ones(width);
    layer->bn.shift = Eigen::VectorXd::Zero(width);
    layer->bn_state.running_mean = Eigen::VectorXd::Zero(width);
    layer->bn_state.running_var = Eigen::VectorXd::Ones(width);
  }
  ne.layer2.bn.shift << 2.5, -1.0;
  const SpatialGraph g = build_graph({{0, 1}}, 3);
  const auto emb = ne.forward(g.normalized_adjacency(), ForwardMode::Eval);
  for (int i = 0; i < 3; ++i) {
    CHECK(emb(i, 0) == doctest::Approx(2.5));
    CHECK(emb(i, 1) == doctest::Approx(-1.0));
  }
}

TEST_CASE("permutation equivariance of node embeddings") {
  const int n = 8;
  UrbanModel model = random_model(n, 3, 4, 6, 5, 21, 2);
  const SpatialGraph g = build_graph({{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6},
                                      {6, 7}, {0, 7}, {2, 6}},
                                     n);
  const Eigen::MatrixXd base = model.node_embedder.forward(g.normalized_adjacency(),
                                                           ForwardMode::Eval);
  // Relabel nodes by a permutation: permute the adjacency and the rows of W1
  // (the one-hot input weights).
  std::vector<int> perm = {3, 0, 7, 5, 1, 6, 2, 4};
  std::vector<std::pair<int, int>> edges;
  for (const auto& [a, b] : g.edges) edges.emplace_back(perm[a], perm[b]);
  const SpatialGraph gp = build_graph(edges, n);
  UrbanModel permuted = model;
  for (int i = 0; i < n; ++i)
    permuted.node_embedder.layer1.weight.row(perm[i]) = model.node_embedder.layer1.weight.row(i);
  const Eigen::MatrixXd moved = permuted.node_embedder.forward(gp.normalized_adjacency(),
                                                               ForwardMode::Eval);
  for (int i = 0; i < n; ++i)
    CHECK((moved.row(perm[i]) - base.row(i)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("swapping one-hot ids of isolated twins swaps their embeddings") {
  UrbanModel model = random_model(2, 2, 3, 3, 4, 4, 1);
  const SpatialGraph g = build_graph({}, 2);
  const Eigen::MatrixXd base =
      model.node_embedder.forward(g.normalized_adjacency(), ForwardMode::Eval);
  UrbanModel swapped = model;
  swapped.node_embedder.layer1.weight.row(0) = model.node_embedder.layer1.weight.row(1);
  swapped.node_embedder.layer1.weight.row(1) = model.node_embedder.layer1.weight.row(0);
  const Eigen::MatrixXd moved =
      swapped.node_embedder.forward(g.normalized_adjacency(), ForwardMode::Eval);
  CHECK((moved.row(0) - base.row(1)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((moved.row(1) - base.row(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("graph size mismatch raises") {
  UrbanModel model = random_model(4, 2, 3, 3, 4, 4, 1);
  const SpatialGraph g = build_graph({}, 5);
  CHECK_THROWS(model.node_embedder.forward(g.normalized_adjacency(), ForwardMode::Eval));
}

TEST_CASE("predicted rating is the embedding dot product") {
  Eigen::MatrixXd emb(2, 3);
  emb << 0, 0, 0, 1, 2, 0;
  TypeEmbedder types;
  types.table = Eigen::MatrixXd(2, 3);
  types.table << 1, 0, 0, 3, -1, 0;
  CHECK(predict_rating(emb, types, 0, 0) == 0.0);
  CHECK(predict_rating(emb, types, 1, 0) == 1.0);   // unit basis overlap
  CHECK(predict_rating(emb, types, 1, 1) == 1.0);   // [1,2,0].[3,-1,0]
  CHECK_THROWS(predict_rating(emb, types, 2, 0));
}

TEST_CASE("rating prediction is bilinear in the node embedding") {
  UrbanModel model = random_model(3, 4, 3, 3, 5, 8, 2);
  const SpatialGraph g = build_graph({{0, 1}}, 3);
  Eigen::MatrixXd emb = model.node_embedder.forward(g.normalized_adjacency(),
                                                    ForwardMode::Eval);
  const double before = predict_rating(emb, model.type_embedder, 1, 2);
  emb.row(1) *= 3.0;
  CHECK(predict_rating(emb, model.type_embedder, 1, 2) == doctest::Approx(3.0 * before));
}

TEST_CASE("mean reporting coefficients average the rated types") {
  ReportingHead head;
  head.alpha = Eigen::VectorXd(3);
  head.alpha << -1.0, -3.0, 100.0;
  head.theta = Eigen::MatrixXd(3, 2);
  head.theta << 1, 0, 0, 2, 50, 50;
  head.rated = {1, 1, 0};
  const MeanCoefficients m = head.mean_coefficients();
  CHECK(m.alpha == doctest::Approx(-2.0));
  CHECK(m.theta[0] == doctest::Approx(0.5));
  CHECK(m.theta[1] == doctest::Approx(1.0));

  head.rated = {1, 0, 0};
  const MeanCoefficients single = head.mean_coefficients();
  CHECK(single.alpha == -1.0);  // one rated type: its own coefficients

  head.rated = {0, 0, 0};
  CHECK_THROWS(head.mean_coefficients());
}

TEST_CASE("reporting probability cases") {
  ReportingHead head;
  head.alpha = Eigen::VectorXd(2);
  head.alpha << -0.197, -1.0;
  head.theta = Eigen::MatrixXd::Zero(2, 2);
  head.rated = {1, 0};
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2);

  // Case 1 at the decision boundary.
  CHECK(report_probability_observed(head, 1, 0.0, x) == doctest::Approx(0.5));
  // Scalar logistic oracle.
  CHECK(report_probability_observed(head, 0, 1.0, x) == doctest::Approx(0.450895).epsilon(1e-5));
  // With exactly one rated type, case 3 collapses to case 2 for any cell.
  head.rated = {1, 0};
  const double case2 = report_probability_latent(head, 0, 0.8, x);
  head.rated = {1, 1};
  head.alpha[1] = head.alpha[0];
  const double case2_own = report_probability_latent(head, 1, 0.8, x);
  CHECK(case2 == doctest::Approx(case2_own));
  // Output stays inside (0,1).
  CHECK(report_probability_latent(head, 0, 1e4, x) > 0.0);
  CHECK(report_probability_latent(head, 0, -1e4, x) < 1.0);
}

TEST_CASE("report probability is decreasing in the rating when alpha is negative") {
  ReportingHead head;
  head.alpha = Eigen::VectorXd(1);
  head.alpha << -0.5;
  head.theta = Eigen::MatrixXd::Constant(1, 2, 0.3);
  head.rated = {1};
  Eigen::VectorXd x(2);
  x << 0.7, 1.0;
  double previous = 1.0;
  for (double r = -3.0; r <= 3.0; r += 0.25) {
    const double p = report_probability_latent(head, 0, r, x);
    CHECK(p < previous);
    previous = p;
  }
}

TEST_CASE("case dispatch depends only on the observation mask") {
  ReportingHead head;
  head.alpha = Eigen::VectorXd(2);
  head.alpha << -0.4, -0.9;
  head.theta = Eigen::MatrixXd::Zero(2, 2);
  head.rated = {1, 0};
  Eigen::MatrixXd pred = Eigen::MatrixXd::Constant(3, 2, 0.5);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 2);
  const Eigen::MatrixXd probs = report_probability_matrix(head, pred, x);
  // Type 0 is rated (own alpha), type 1 unrated (mean alpha = type 0's).
  CHECK(probs(0, 0) == doctest::Approx(sigmoid(-0.4 * 0.5)));
  CHECK(probs(0, 1) == doctest::Approx(sigmoid(-0.4 * 0.5)));
  // Under per-type dispatch (reports-only regime) type 1 uses its own alpha.
  const Eigen::MatrixXd own = report_probability_matrix(head, pred, x, true);
  CHECK(own(0, 1) == doctest::Approx(sigmoid(-0.9 * 0.5)));
}

TEST_CASE("checkpoints round trip bit for bit") {
  UrbanModel model = random_model(5, 3, 4, 4, 6, 99, 2);
  const SpatialGraph g = build_graph({{0, 1}, {2, 3}, {3, 4}}, 5);
  // Move the bn state off its initial values.
  model.node_embedder.forward(g.normalized_adjacency(), ForwardMode::Train, true);
  const auto dir = std::filesystem::temp_directory_path() / "urban_ckpt_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "model.bin").string();
  save_checkpoint(model, path);
  UrbanModel loaded = load_checkpoint(path);
  CHECK(loaded.head.rated == model.head.rated);
  const Eigen::MatrixXd a = model.node_embedder.forward(g.normalized_adjacency(),
                                                        ForwardMode::Eval);
  const Eigen::MatrixXd b = loaded.node_embedder.forward(g.normalized_adjacency(),
                                                         ForwardMode::Eval);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.head.theta - model.head.theta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_SUITE_END();
