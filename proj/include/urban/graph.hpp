#pragma once

#include <Eigen/SparseCore>
#include <utility>
#include <vector>

namespace urban {

/// Adjacency graph over spatial units (tracts). Nodes are 0..n-1; edges are
/// undirected and stored once as (lo, hi) pairs. Immutable after construction.
struct SpatialGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // deduplicated, lo < hi, sorted

  std::vector<std::vector<int>> neighbor_lists() const;

  /// Symmetrically normalized adjacency with self loops:
  /// D^{-1/2} (A + I) D^{-1/2}.
  Eigen::SparseMatrix<double> normalized_adjacency() const;
};

/// Builds the graph from raw node-id pairs. Rejects self edges and
/// out-of-range endpoints; duplicates and reversed pairs collapse to one edge.
SpatialGraph build_graph(const std::vector<std::pair<int, int>>& edges, int n);

/// Regular grid graph (4-neighborhood), used by the synthetic benchmark.
SpatialGraph grid_graph(int rows, int cols);

}  // namespace urban
