#include "gcd/eval.hpp"

#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace gcd {

EvalReport evaluate(const Partition& partition, const EmbeddingDataset& dataset) {
  const Eigen::Index n = dataset.size();
  if (static_cast<Eigen::Index>(partition.community.size()) != n) {
    throw InvalidArgument("partition covers " + std::to_string(partition.community.size()) +
                          " instances but the dataset has " + std::to_string(n));
  }
  if (!dataset.eval_truth || !dataset.known_mask) {
    throw InvalidArgument("evaluation needs eval_truth and known_mask");
  }
  const IndexVector& truth = *dataset.eval_truth;
  const auto& known = *dataset.known_mask;

  EvalReport report;
  report.discovered_k = partition.num_communities;
  const std::set<int> all_classes(truth.data(), truth.data() + n);
  report.true_k = static_cast<int>(all_classes.size());

  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!dataset.is_labeled(i)) rows.push_back(i);
  }
  if (rows.empty()) throw InvalidArgument("no unlabeled instances to evaluate");

  std::map<int, int> class_column;
  for (Eigen::Index i : rows) class_column.emplace(truth[i], 0);
  for (auto& [cls, col] : class_column) {
    col = static_cast<int>(report.class_ids.size());
    report.class_ids.push_back(cls);
  }
  report.confusion = MatrixX<long long>::Zero(partition.num_communities,
                                              static_cast<Eigen::Index>(class_column.size()));
  for (Eigen::Index i : rows) ++report.confusion(partition.community[i], class_column[truth[i]]);

  const auto matching = hungarian_match(report.confusion);
  for (Eigen::Index i : rows) {
    const bool correct = matching.cluster_to_class[partition.community[i]] == class_column[truth[i]];
    ++report.n_all;
    report.correct_all += correct;
    if (known[i]) {
      ++report.n_known;
      report.correct_known += correct;
    } else {
      ++report.n_novel;
      report.correct_novel += correct;
    }
  }
  auto ratio = [](Eigen::Index num, Eigen::Index den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  report.acc_all = ratio(report.correct_all, report.n_all);
  report.acc_known = ratio(report.correct_known, report.n_known);
  report.acc_novel = ratio(report.correct_novel, report.n_novel);
  return report;
}

void print_report_table(const EvalReport& report, std::ostream& out) {
  const auto flags = out.flags();
  out << std::fixed << std::setprecision(4);
  out << "group   instances  correct  accuracy\n";
  out << "All     " << std::setw(9) << report.n_all << "  " << std::setw(7) << report.correct_all << "  "
      << report.acc_all << '\n';
  out << "Known   " << std::setw(9) << report.n_known << "  " << std::setw(7) << report.correct_known
      << "  " << report.acc_known << '\n';
  out << "Novel   " << std::setw(9) << report.n_novel << "  " << std::setw(7) << report.correct_novel
      << "  " << report.acc_novel << '\n';
  out << "categories discovered " << report.discovered_k << " (true " << report.true_k << ")\n";
  out.flags(flags);
}

void print_report_keys(const EvalReport& report, std::ostream& out) {
  const auto flags = out.flags();
  out << std::fixed << std::setprecision(4);
  out << "acc_all=" << report.acc_all << '\n';
  out << "acc_known=" << report.acc_known << '\n';
  out << "acc_novel=" << report.acc_novel << '\n';
  out << "k=" << report.discovered_k << '\n';
  out << "true_k=" << report.true_k << '\n';
  out << "n_all=" << report.n_all << '\n';
  out << "n_known=" << report.n_known << '\n';
  out << "n_novel=" << report.n_novel << '\n';
  out.flags(flags);
}

std::string report_keys(const EvalReport& report) {
  std::ostringstream ss;
  print_report_keys(report, ss);
  return ss.str();
}

}  // namespace gcd
