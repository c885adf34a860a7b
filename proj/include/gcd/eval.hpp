#pragma once

#include <algorithm>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "gcd/dataset.hpp"
#include "gcd/error.hpp"
#include "gcd/graph.hpp"
#include "gcd/types.hpp"

namespace gcd {

template <typename Scalar>
struct Matching {
  // cluster_to_class[r] is the matched column for row r, or -1 when row r
  // was matched to a zero-padding column.
  std::vector<int> cluster_to_class;
  Scalar matched = 0;
};

// Maximum-weight one-to-one matching of rows (clusters) to columns (classes)
// on the zero-padded square matrix. O(n^3) shortest augmenting path form of
// the Hungarian method; exact for integer Scalar.
template <typename Derived>
Matching<typename Derived::Scalar> hungarian_match(const Eigen::MatrixBase<Derived>& weights) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index rows = weights.rows();
  const Eigen::Index cols = weights.cols();
  if (rows == 0 || cols == 0) throw InvalidArgument("hungarian_match: empty matrix");
  const Eigen::Index n = std::max(rows, cols);
  const Scalar top = weights.maxCoeff();
  // Minimize cost = top - weight on the padded matrix (padding weight 0).
  auto cost = [&](Eigen::Index r, Eigen::Index c) -> Scalar {
    return (r < rows && c < cols) ? top - weights(r, c) : top;
  };

  const Scalar inf = std::numeric_limits<Scalar>::max() / 4;
  // 1-based potentials; column 0 is a virtual start.
  std::vector<Scalar> u(n + 1, 0), v(n + 1, 0);
  std::vector<Eigen::Index> row_of(n + 1, 0), way(n + 1, 0);
  for (Eigen::Index r = 1; r <= n; ++r) {
    row_of[0] = r;
    Eigen::Index col0 = 0;
    std::vector<Scalar> min_slack(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const Eigen::Index r0 = row_of[col0];
      Scalar delta = inf;
      Eigen::Index col1 = 0;
      for (Eigen::Index c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const Scalar slack = cost(r0 - 1, c - 1) - u[r0] - v[c];
        if (slack < min_slack[c]) {
          min_slack[c] = slack;
          way[c] = col0;
        }
        if (min_slack[c] < delta) {
          delta = min_slack[c];
          col1 = c;
        }
      }
      for (Eigen::Index c = 0; c <= n; ++c) {
        if (used[c]) {
          u[row_of[c]] += delta;
          v[c] -= delta;
        } else {
          min_slack[c] -= delta;
        }
      }
      col0 = col1;
    } while (row_of[col0] != 0);
    do {
      const Eigen::Index col1 = way[col0];
      row_of[col0] = row_of[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  Matching<Scalar> out;
  out.cluster_to_class.assign(rows, -1);
  for (Eigen::Index c = 1; c <= n; ++c) {
    const Eigen::Index r = row_of[c] - 1;
    if (r < rows && c - 1 < cols) {
      out.cluster_to_class[r] = static_cast<int>(c - 1);
      out.matched += weights(r, c - 1);
    }
  }
  return out;
}

struct EvalReport {
  double acc_all = 0.0;
  double acc_known = 0.0;
  double acc_novel = 0.0;
  Eigen::Index n_all = 0;  // evaluated (unlabeled) instances
  Eigen::Index n_known = 0;
  Eigen::Index n_novel = 0;
  Eigen::Index correct_all = 0;
  Eigen::Index correct_known = 0;
  Eigen::Index correct_novel = 0;
  int discovered_k = 0;
  int true_k = 0;
  std::vector<int> class_ids;  // column order of `confusion`
  MatrixX<long long> confusion;  // cluster x class, unlabeled instances
};

// Clustering accuracy on the unlabeled rows under a single global Hungarian
// match, then sliced into known / novel groups by known_mask.
EvalReport evaluate(const Partition& partition, const EmbeddingDataset& dataset);

// Human-readable table.
void print_report_table(const EvalReport& report, std::ostream& out);
// `key=value` lines, accuracies with 4 decimals.
void print_report_keys(const EvalReport& report, std::ostream& out);
std::string report_keys(const EvalReport& report);

}  // namespace gcd
