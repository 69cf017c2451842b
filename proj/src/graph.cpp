#include "urban/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace urban {

std::vector<std::vector<int>> SpatialGraph::neighbor_lists() const {
  std::vector<std::vector<int>> adj(n);
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (auto& lst : adj) std::sort(lst.begin(), lst.end());
  return adj;
}

Eigen::SparseMatrix<double> SpatialGraph::normalized_adjacency() const {
  std::vector<double> degree(n, 1.0);  // self loop contributes 1
  for (const auto& [a, b] : edges) {
    degree[a] += 1.0;
    degree[b] += 1.0;
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges.size() * 2 + n);
  for (int i = 0; i < n; ++i) triplets.emplace_back(i, i, 1.0 / degree[i]);
  for (const auto& [a, b] : edges) {
    const double w = 1.0 / std::sqrt(degree[a] * degree[b]);
    triplets.emplace_back(a, b, w);
    triplets.emplace_back(b, a, w);
  }
  Eigen::SparseMatrix<double> ahat(n, n);
  ahat.setFromTriplets(triplets.begin(), triplets.end());
  return ahat;
}

SpatialGraph build_graph(const std::vector<std::pair<int, int>>& edges, int n) {
  if (n < 0) throw std::invalid_argument("build_graph: negative node count");
  SpatialGraph g;
  g.n = n;
  g.edges.reserve(edges.size());
  for (const auto& [a, b] : edges) {
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw std::invalid_argument("build_graph: edge (" + std::to_string(a) + "," +
                                  std::to_string(b) + ") endpoint outside [0," +
                                  std::to_string(n) + ")");
    if (a == b)
      throw std::invalid_argument("build_graph: self-edge at node " + std::to_string(a));
    g.edges.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

SpatialGraph grid_graph(int rows, int cols) {
  std::vector<std::pair<int, int>> edges;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int id = r * cols + c;
      if (c + 1 < cols) edges.emplace_back(id, id + 1);
      if (r + 1 < rows) edges.emplace_back(id, id + cols);
    }
  }
  return build_graph(edges, rows * cols);
}

}  // namespace urban
