#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "gcd/types.hpp"

namespace gcd {

inline constexpr int kUnlabeled = -1;

// N feature rows with partial labels. `eval_truth` and `known_mask` carry
// ground truth for evaluation only and are never read by training.
struct EmbeddingDataset {
  Matrix features;  // N x D
  IndexVector labels;  // kUnlabeled for unlabeled rows
  std::optional<IndexVector> eval_truth;
  std::optional<std::vector<bool>> known_mask;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  Eigen::Index num_labeled() const;
  bool is_labeled(Eigen::Index i) const { return labels[i] != kUnlabeled; }

  // Throws InvalidArgument describing the first violated invariant.
  void validate() const;
};

enum class FileFormat { kBinary, kCsv };

// Picks kCsv for a ".csv" extension, kBinary otherwise.
FileFormat format_for_path(const std::filesystem::path& path);

EmbeddingDataset load_embeddings(const std::filesystem::path& path, FileFormat format);
void save_embeddings(const EmbeddingDataset& dataset, const std::filesystem::path& path,
                     FileFormat format);

struct SplitSpec {
  double known_class_fraction = 0.5;
  double labeled_instance_fraction = 0.5;
  std::uint64_t seed = 0;
};

// Relabels `dataset` into a labeled subset of known classes plus an
// unlabeled remainder. Requires eval_truth on every row.
EmbeddingDataset make_split(const EmbeddingDataset& dataset, const SplitSpec& spec);

struct SynthSpec {
  int num_classes = 10;
  int points_per_class = 100;
  int dim = 32;
  double center_separation = 1.0;
  double cluster_stddev = 0.05;
  std::uint64_t seed = 0;
};

// Isotropic Gaussian blobs around mutually orthogonal centers of norm
// separation/sqrt(2), so every pair of centers is exactly `center_separation`
// apart. Needs dim >= num_classes. Rows are grouped by class; every row is
// unlabeled and eval_truth holds the generating component.
EmbeddingDataset generate_synthetic(const SynthSpec& spec);

}  // namespace gcd
