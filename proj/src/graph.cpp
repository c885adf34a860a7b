#include "gcd/graph.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "gcd/error.hpp"

namespace gcd {

SimilarityGraph SimilarityGraph::from_edges(Eigen::Index num_nodes,
                                            const std::vector<WeightedEdge>& edges) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * edges.size());
  for (const auto& e : edges) {
    if (e.i == e.j) throw InvalidArgument("self-loops are not allowed");
    if (e.i < 0 || e.j < 0 || e.i >= num_nodes || e.j >= num_nodes) {
      throw InvalidArgument("edge endpoint out of range");
    }
    if (!(e.w >= 0.0)) throw InvalidArgument("edge weights must be nonnegative");
    triplets.emplace_back(e.i, e.j, e.w);
    triplets.emplace_back(e.j, e.i, e.w);
  }
  SimilarityGraph g;
  g.adjacency.resize(num_nodes, num_nodes);
  g.adjacency.setFromTriplets(triplets.begin(), triplets.end());
  g.adjacency.makeCompressed();
  return g;
}

std::vector<WeightedEdge> SimilarityGraph::edges() const {
  std::vector<WeightedEdge> out;
  // Column-major storage: column j holds rows i; keep i < j, then sort.
  for (Eigen::Index j = 0; j < adjacency.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(adjacency, j); it; ++it) {
      if (it.row() < j) out.push_back({it.row(), j, it.value()});
    }
  }
  std::sort(out.begin(), out.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  return out;
}

double SimilarityGraph::total_weight() const { return 0.5 * adjacency.sum(); }

SimilarityGraph build_graph(const Matrix& z, const EmbeddingDataset& dataset, int neighbors) {
  const Eigen::Index n = z.rows();
  if (dataset.size() != n) throw InvalidArgument("embedding rows do not match dataset size");
  if (neighbors < 1 || neighbors >= n) {
    throw InvalidArgument("neighbor count M=" + std::to_string(neighbors) +
                          " must satisfy 1 <= M < N=" + std::to_string(n));
  }
  const Matrix sim = z * z.transpose();

  // Undirected pairs keyed by (min, max); must-links are inserted first and
  // never overwritten.
  std::map<std::pair<Eigen::Index, Eigen::Index>, double> weights;

  std::unordered_map<int, std::vector<Eigen::Index>> by_class;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (dataset.is_labeled(i)) by_class[dataset.labels[i]].push_back(i);
  }
  for (const auto& [cls, members] : by_class) {
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) weights[{members[a], members[b]}] = 1.0;
    }
  }

  std::vector<Eigen::Index> order(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::iota(order.begin(), order.begin() + i, Eigen::Index{0});
    std::iota(order.begin() + i, order.end(), i + 1);
    std::partial_sort(order.begin(), order.begin() + neighbors, order.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        return sim(i, a) != sim(i, b) ? sim(i, a) > sim(i, b) : a < b;
                      });
    for (int r = 0; r < neighbors; ++r) {
      const Eigen::Index j = order[r];
      const double w = std::clamp(sim(i, j), 0.0, 1.0);
      if (w > 0.0) weights.try_emplace({std::min(i, j), std::max(i, j)}, w);
    }
  }

  std::vector<WeightedEdge> edges;
  edges.reserve(weights.size());
  for (const auto& [key, w] : weights) edges.push_back({key.first, key.second, w});
  SimilarityGraph g = SimilarityGraph::from_edges(n, edges);
  g.neighbors = neighbors;
  return g;
}

void write_edge_list(const SimilarityGraph& graph, std::ostream& out) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& e : graph.edges()) out << e.i << '\t' << e.j << '\t' << e.w << '\n';
}

void write_edge_list(const SimilarityGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_edge_list(graph, out);
  if (!out) throw IoError("write failed for " + path.string());
}

Partition Partition::from_labels(const std::vector<int>& labels) {
  Partition p;
  p.community.resize(labels.size());
  std::unordered_map<int, int> dense;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto [it, inserted] = dense.try_emplace(labels[i], static_cast<int>(dense.size()));
    p.community[i] = it->second;
  }
  p.num_communities = static_cast<int>(dense.size());
  return p;
}

double modularity(const SimilarityGraph& graph, const std::vector<int>& community) {
  if (static_cast<Eigen::Index>(community.size()) != graph.num_nodes()) {
    throw InvalidArgument("partition does not cover every node");
  }
  const double m = graph.total_weight();
  if (!(m > 0.0)) throw InvalidArgument("modularity is undefined for a graph with zero total weight");
  const int k = community.empty() ? 0 : *std::max_element(community.begin(), community.end()) + 1;
  std::vector<double> inside(k, 0.0);
  std::vector<double> degree(k, 0.0);
  for (Eigen::Index j = 0; j < graph.adjacency.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(graph.adjacency, j); it; ++it) {
      degree[community[j]] += it.value();
      // Each undirected edge is visited twice.
      if (community[it.row()] == community[j]) inside[community[j]] += 0.5 * it.value();
    }
  }
  double q = 0.0;
  for (int c = 0; c < k; ++c) {
    const double share = degree[c] / (2.0 * m);
    q += inside[c] / m - share * share;
  }
  return q;
}

double modularity(const SimilarityGraph& graph, const Partition& partition) {
  return modularity(graph, partition.community);
}

}  // namespace gcd
