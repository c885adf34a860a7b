#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "gcd/error.hpp"
#include "gcd/graph.hpp"

namespace gcd {

namespace {

// Graph at one aggregation level. `loops[i]` is the weight internal to
// super-node i, counted once per undirected edge.
struct LevelGraph {
  std::vector<std::vector<std::pair<int, double>>> adj;  // no self entries
  std::vector<double> loops;

  int size() const { return static_cast<int>(adj.size()); }
  double degree(int i) const {
    double d = 2.0 * loops[i];
    for (const auto& [j, w] : adj[i]) d += w;
    return d;
  }
};

LevelGraph from_similarity(const SimilarityGraph& graph) {
  LevelGraph g;
  const auto n = static_cast<int>(graph.num_nodes());
  g.adj.resize(n);
  g.loops.assign(n, 0.0);
  for (int j = 0; j < n; ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(graph.adjacency, j); it; ++it) {
      g.adj[j].emplace_back(static_cast<int>(it.row()), it.value());
    }
    std::sort(g.adj[j].begin(), g.adj[j].end());
  }
  return g;
}

// One round of local moves. Returns true if any node changed community.
bool local_moves(const LevelGraph& g, double m, std::vector<int>& community,
                 const std::vector<int>& order, double min_gain) {
  const int n = g.size();
  std::vector<double> degree(n);
  std::vector<double> total(n, 0.0);  // sum of degrees per community
  for (int i = 0; i < n; ++i) {
    degree[i] = g.degree(i);
    total[community[i]] += degree[i];
  }

  std::vector<double> link(n, 0.0);  // weight from the current node into each community
  std::vector<char> seen(n, 0);
  std::vector<int> touched;
  bool any_move = false;
  bool moved = true;
  while (moved) {
    moved = false;
    for (int i : order) {
      const int own = community[i];
      touched.clear();
      for (const auto& [j, w] : g.adj[i]) {
        const int c = community[j];
        if (!seen[c]) {
          seen[c] = 1;
          touched.push_back(c);
        }
        link[c] += w;
      }
      total[own] -= degree[i];

      // Gain of inserting isolated i into community c, in units of 1/m.
      auto gain = [&](int c) { return link[c] - total[c] * degree[i] / (2.0 * m); };
      const double stay = gain(own);
      std::sort(touched.begin(), touched.end());
      int best = own;
      double best_gain = stay;
      for (int c : touched) {
        if (c == own) continue;
        const double g_c = gain(c);
        if (g_c > best_gain) {
          best = c;
          best_gain = g_c;
        }
      }
      if (best != own && (best_gain - stay) / m > min_gain) {
        community[i] = best;
        moved = true;
        any_move = true;
      }
      total[community[i]] += degree[i];
      for (int c : touched) {
        link[c] = 0.0;
        seen[c] = 0;
      }
    }
  }
  return any_move;
}

// Relabels `community` densely by first appearance and returns the count.
int renumber(std::vector<int>& community) {
  std::vector<int> map(community.size(), -1);
  int next = 0;
  for (int& c : community) {
    if (map[c] < 0) map[c] = next++;
    c = map[c];
  }
  return next;
}

LevelGraph aggregate(const LevelGraph& g, const std::vector<int>& community, int count) {
  LevelGraph out;
  out.adj.resize(count);
  out.loops.assign(count, 0.0);
  std::vector<std::vector<std::pair<int, double>>> pending(count);
  for (int i = 0; i < g.size(); ++i) {
    const int ci = community[i];
    out.loops[ci] += g.loops[i];
    for (const auto& [j, w] : g.adj[i]) {
      const int cj = community[j];
      if (ci == cj) {
        if (i < j) out.loops[ci] += w;
      } else {
        pending[ci].emplace_back(cj, w);
      }
    }
  }
  for (int c = 0; c < count; ++c) {
    auto& list = pending[c];
    std::sort(list.begin(), list.end());
    for (const auto& [d, w] : list) {
      if (!out.adj[c].empty() && out.adj[c].back().first == d) {
        out.adj[c].back().second += w;
      } else {
        out.adj[c].emplace_back(d, w);
      }
    }
  }
  return out;
}

}  // namespace

Partition louvain(const SimilarityGraph& graph, const LouvainOptions& options) {
  if (!(options.min_gain > 0.0)) throw InvalidArgument("min_gain must be positive");
  const auto n = static_cast<int>(graph.num_nodes());
  std::vector<int> assignment(n);
  std::iota(assignment.begin(), assignment.end(), 0);

  const double m = graph.total_weight();
  if (!(m > 0.0)) {
    Partition p = Partition::from_labels(assignment);
    p.modularity = 0.0;
    p.degenerate = true;
    return p;
  }

  std::mt19937_64 rng(options.seed);
  LevelGraph level = from_similarity(graph);
  while (true) {
    std::vector<int> community(level.size());
    std::iota(community.begin(), community.end(), 0);
    std::vector<int> order(level.size());
    std::iota(order.begin(), order.end(), 0);
    if (options.shuffle_nodes) std::shuffle(order.begin(), order.end(), rng);

    if (!local_moves(level, m, community, order, options.min_gain)) break;
    const int count = renumber(community);
    for (int& a : assignment) a = community[a];
    level = aggregate(level, community, count);
  }

  Partition p = Partition::from_labels(assignment);
  p.modularity = modularity(graph, p);
  return p;
}

}  // namespace gcd
