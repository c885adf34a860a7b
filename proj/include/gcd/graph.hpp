#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/SparseCore>

#include "gcd/dataset.hpp"
#include "gcd/types.hpp"

namespace gcd {

struct WeightedEdge {
  Eigen::Index i;
  Eigen::Index j;
  double w;
};

// Undirected weighted graph without self-loops, stored as a symmetric
// sparse adjacency matrix.
struct SimilarityGraph {
  Eigen::SparseMatrix<double> adjacency;
  int neighbors = 0;  // M used to build the graph; 0 when built from edges

  static SimilarityGraph from_edges(Eigen::Index num_nodes, const std::vector<WeightedEdge>& edges);

  Eigen::Index num_nodes() const { return adjacency.rows(); }
  // Each undirected edge once, i < j, sorted by (i, j).
  std::vector<WeightedEdge> edges() const;
  double total_weight() const;
};

// Semi-supervised adjacency: weight 1 between labeled rows of the same
// class; otherwise max(0, cos) when either endpoint is among the other's M
// most similar rows; no edge elsewhere.
SimilarityGraph build_graph(const Matrix& z, const EmbeddingDataset& dataset, int neighbors);

// Writes `i<TAB>j<TAB>w` lines sorted by (i, j).
void write_edge_list(const SimilarityGraph& graph, std::ostream& out);
void write_edge_list(const SimilarityGraph& graph, const std::filesystem::path& path);

struct Partition {
  std::vector<int> community;  // dense ids 0..num_communities-1
  int num_communities = 0;
  double modularity = 0.0;
  bool degenerate = false;  // set when the input graph had no edges

  // Relabels arbitrary ids densely in order of first appearance.
  static Partition from_labels(const std::vector<int>& labels);
};

// Newman weighted modularity at resolution 1.
double modularity(const SimilarityGraph& graph, const Partition& partition);
double modularity(const SimilarityGraph& graph, const std::vector<int>& community);

struct LouvainOptions {
  double min_gain = 1e-7;
  std::uint64_t seed = 0;
  bool shuffle_nodes = false;  // ascending node order unless set
};

Partition louvain(const SimilarityGraph& graph, const LouvainOptions& options = {});

}  // namespace gcd
