#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcd/dataset.hpp"
#include "gcd/head.hpp"
#include "gcd/losses.hpp"
#include "gcd/views.hpp"

namespace gcd {

struct PrototypeBank {
  Matrix c;  // K x D', unit rows

  static PrototypeBank initialize(Eigen::Index count, Eigen::Index dim, std::uint64_t seed);
  Eigen::Index size() const { return c.rows(); }
  void renormalize() { c.rowwise().normalize(); }
};

// Switches for the three objective terms; all on is the full objective.
struct LossTerms {
  bool sup = true;
  bool js = true;
  bool swap = true;
};

struct TrainSpec {
  double alpha = 0.3;
  Temperatures temps;
  SinkhornSpec sinkhorn;
  ViewSpec view;
  int batch_size = 128;
  int epochs = 30;
  double learning_rate = 0.1;
  int k_proto = 100;
  int hidden_dim = 64;
  int out_dim = 32;
  std::uint64_t seed = 0;
  LossTerms terms;

  void validate() const;
};

struct LossBreakdown {
  double total = 0.0;
  double sup = 0.0;   // supervised contrastive, labeled sub-batch
  double js = 0.0;    // weak-view feature/assignment consistency
  double swap = 0.0;  // cross-view swapped prediction
};

struct EpochRecord {
  int epoch = 0;
  LossBreakdown loss;  // step averages
  double learning_rate = 0.0;
};

// One mini-batch after augmentation. `labels` is per row, kUnlabeled for
// unlabeled rows.
struct Batch {
  Matrix weak;
  Matrix strong;
  std::vector<int> labels;
};

// Sinkhorn codes for a batch, K x B each. Treated as constants.
struct BatchCodes {
  Matrix weak;
  Matrix strong;
};

struct ObjectiveGrad {
  LossBreakdown loss;
  HeadGrad head;
  Matrix prototypes;
};

BatchCodes compute_codes(const ProjectionHead& head, const PrototypeBank& prototypes,
                         const Batch& batch, const TrainSpec& spec);

// Value and gradient of the weighted objective
//   sup + alpha * js + (1 - alpha) * swap
// on a fixed batch with fixed codes.
ObjectiveGrad evaluate_objective(const ProjectionHead& head, const PrototypeBank& prototypes,
                                 const Batch& batch, const BatchCodes& codes,
                                 const TrainSpec& spec);

class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(std::int64_t step)
      : std::runtime_error("loss became non-finite at step " + std::to_string(step)), step_(step) {}
  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

struct TrainResult {
  ProjectionHead head;
  PrototypeBank prototypes;
  std::vector<EpochRecord> history;
  bool completed = true;  // false when stopped early through `stop`
};

struct TrainOptions {
  // Polled between steps; training returns early with completed=false.
  const std::atomic<bool>* stop = nullptr;
  // Runs after every optimizer step (prototypes already renormalized).
  std::function<void(std::int64_t step, const ProjectionHead&, const PrototypeBank&)> on_step;
};

TrainResult initialize_model(Eigen::Index in_dim, const TrainSpec& spec);
TrainResult train(const EmbeddingDataset& dataset, const TrainSpec& spec,
                  const TrainOptions& options = {});

// Projected unit-norm embeddings z_i = h(x_i), N x D'.
Matrix embed(const EmbeddingDataset& dataset, const ProjectionHead& head);

}  // namespace gcd
