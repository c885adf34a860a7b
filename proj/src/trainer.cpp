#include "gcd/trainer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <tuple>

#include "gcd/error.hpp"

namespace gcd {

namespace {

// Independent RNG streams derived from the run seed.
enum class Stream : std::uint32_t { kHead = 1, kPrototypes = 2, kBatches = 3 };

std::uint64_t stream_seed(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::uint64_t out = 0;
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  out = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  return out;
}

void check_labeled_classes(const EmbeddingDataset& dataset) {
  std::map<int, int> counts;
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    if (dataset.is_labeled(i)) ++counts[dataset.labels[i]];
  }
  const auto usable = std::count_if(counts.begin(), counts.end(),
                                    [](const auto& kv) { return kv.second >= 2; });
  if (usable < 2) {
    throw InvalidArgument("supervised contrastive term needs >= 2 labeled classes with >= 2 instances each");
  }
}

double cosine_lr(double base, std::int64_t step, std::int64_t total) {
  if (total <= 1) return base;
  const double t = static_cast<double>(step) / static_cast<double>(total);
  return 0.5 * base * (1.0 + std::cos(std::numbers::pi * t));
}

bool finite(const LossBreakdown& l) {
  return std::isfinite(l.total) && std::isfinite(l.sup) && std::isfinite(l.js) && std::isfinite(l.swap);
}

}  // namespace

PrototypeBank PrototypeBank::initialize(Eigen::Index count, Eigen::Index dim, std::uint64_t seed) {
  if (count < 2 || dim < 2) throw InvalidArgument("prototype bank needs K >= 2 and D' >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  PrototypeBank bank;
  bank.c.resize(count, dim);
  for (Eigen::Index r = 0; r < count; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) bank.c(r, c) = normal(rng);
  }
  bank.renormalize();
  return bank;
}

void TrainSpec::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0, 1]");
  if (!(temps.tau_sup > 0.0) || !(temps.tau_u > 0.0)) {
    throw InvalidArgument("temperatures must be positive");
  }
  if (!(sinkhorn.epsilon > 0.0) || sinkhorn.n_iters < 1) {
    throw InvalidArgument("sinkhorn needs epsilon > 0 and n_iters >= 1");
  }
  view.validate();
  if (batch_size < 2) throw InvalidArgument("batch_size must be >= 2");
  if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  if (k_proto < 2) throw InvalidArgument("k_proto must be >= 2");
  if (hidden_dim < 1 || out_dim < 2) throw InvalidArgument("hidden_dim >= 1 and out_dim >= 2 required");
}

BatchCodes compute_codes(const ProjectionHead& head, const PrototypeBank& prototypes,
                         const Batch& batch, const TrainSpec& spec) {
  const Matrix z_weak = head.forward(batch.weak);
  const Matrix z_strong = head.forward(batch.strong);
  return {sinkhorn_codes(prototypes.c * z_weak.transpose(), spec.sinkhorn),
          sinkhorn_codes(prototypes.c * z_strong.transpose(), spec.sinkhorn)};
}

ObjectiveGrad evaluate_objective(const ProjectionHead& head, const PrototypeBank& prototypes,
                                 const Batch& batch, const BatchCodes& codes,
                                 const TrainSpec& spec) {
  const Eigen::Index b = batch.weak.rows();
  const double tau_u = spec.temps.tau_u;
  const double w_sup = spec.terms.sup ? 1.0 : 0.0;
  const double w_js = spec.terms.js ? spec.alpha : 0.0;
  const double w_swap = spec.terms.swap ? 1.0 - spec.alpha : 0.0;

  ProjectionHead::Cache cache_weak;
  ProjectionHead::Cache cache_strong;
  const Matrix z_weak = head.forward(batch.weak, cache_weak);
  const Matrix z_strong = head.forward(batch.strong, cache_strong);
  Matrix grad_z_weak = Matrix::Zero(b, z_weak.cols());
  Matrix grad_z_strong = Matrix::Zero(b, z_strong.cols());

  ObjectiveGrad out;

  // Both views of each labeled row enter the contrastive batch.
  std::vector<Eigen::Index> labeled;
  for (Eigen::Index i = 0; i < b; ++i) {
    if (batch.labels[i] != kUnlabeled) labeled.push_back(i);
  }
  if (!labeled.empty()) {
    const auto m = static_cast<Eigen::Index>(labeled.size());
    Matrix z_sup(2 * m, z_weak.cols());
    std::vector<int> sup_labels(2 * m);
    for (Eigen::Index j = 0; j < m; ++j) {
      z_sup.row(j) = z_weak.row(labeled[j]);
      z_sup.row(m + j) = z_strong.row(labeled[j]);
      sup_labels[j] = sup_labels[m + j] = batch.labels[labeled[j]];
    }
    const auto sup = sup_con_loss(z_sup, sup_labels, spec.temps.tau_sup);
    out.loss.sup = sup.loss;
    if (w_sup != 0.0) {
      for (Eigen::Index j = 0; j < m; ++j) {
        grad_z_weak.row(labeled[j]) += w_sup * sup.grad.row(j);
        grad_z_strong.row(labeled[j]) += w_sup * sup.grad.row(m + j);
      }
    }
  }

  const Matrix p_weak = prototype_probs(z_weak, prototypes.c, tau_u);
  const Matrix p_strong = prototype_probs(z_strong, prototypes.c, tau_u);
  Matrix grad_p_weak = Matrix::Zero(b, p_weak.cols());
  Matrix grad_p_strong = Matrix::Zero(b, p_strong.cols());

  for (Eigen::Index i = 0; i < b; ++i) {
    const Vector target = codes.weak.col(i) / codes.weak.col(i).sum();
    const auto js = js_consistency_loss(p_weak.row(i).transpose(), target);
    out.loss.js += js.loss / static_cast<double>(b);
    if (w_js != 0.0) grad_p_weak.row(i) += (w_js / static_cast<double>(b)) * js.grad.transpose();
  }

  const auto swapped = swapped_prediction_loss(p_weak, p_strong, codes.weak, codes.strong);
  out.loss.swap = swapped.loss;
  if (w_swap != 0.0) {
    grad_p_weak += w_swap * swapped.grad_weak;
    grad_p_strong += w_swap * swapped.grad_strong;
  }

  const Matrix grad_s_weak = softmax_backward(p_weak, grad_p_weak, tau_u);
  const Matrix grad_s_strong = softmax_backward(p_strong, grad_p_strong, tau_u);
  grad_z_weak += grad_s_weak * prototypes.c;
  grad_z_strong += grad_s_strong * prototypes.c;
  out.prototypes = grad_s_weak.transpose() * z_weak + grad_s_strong.transpose() * z_strong;

  out.head = head.backward(batch.weak, cache_weak, grad_z_weak);
  out.head += head.backward(batch.strong, cache_strong, grad_z_strong);

  out.loss.total = w_sup * out.loss.sup + w_js * out.loss.js + w_swap * out.loss.swap;
  return out;
}

TrainResult initialize_model(Eigen::Index in_dim, const TrainSpec& spec) {
  spec.validate();
  TrainResult result;
  result.head = ProjectionHead::initialize(in_dim, spec.hidden_dim, spec.out_dim,
                                           stream_seed(spec.seed, Stream::kHead));
  result.prototypes = PrototypeBank::initialize(spec.k_proto, spec.out_dim,
                                                stream_seed(spec.seed, Stream::kPrototypes));
  return result;
}

TrainResult train(const EmbeddingDataset& dataset, const TrainSpec& spec, const TrainOptions& options) {
  dataset.validate();
  if (spec.terms.sup) check_labeled_classes(dataset);
  TrainResult result = initialize_model(dataset.dim(), spec);

  const Eigen::Index n = dataset.size();
  const Eigen::Index batch_size = std::min<Eigen::Index>(spec.batch_size, n);
  const Eigen::Index batches_per_epoch = (n + batch_size - 1) / batch_size;
  const std::int64_t total_steps = static_cast<std::int64_t>(batches_per_epoch) * spec.epochs;

  std::mt19937_64 rng(stream_seed(spec.seed, Stream::kBatches));
  std::vector<Eigen::Index> order(n);
  std::int64_t step = 0;
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng);

    EpochRecord record;
    record.epoch = epoch;
    record.learning_rate = cosine_lr(spec.learning_rate, step, total_steps);
    for (Eigen::Index start = 0; start < n; start += batch_size) {
      if (options.stop != nullptr && options.stop->load()) {
        result.completed = false;
        return result;
      }
      const Eigen::Index end = std::min(n, start + batch_size);
      const std::vector<Eigen::Index> rows(order.begin() + start, order.begin() + end);

      Batch batch;
      std::tie(batch.weak, batch.strong) =
          make_view_batch(dataset.features, rows, spec.view, static_cast<std::uint64_t>(step));
      batch.labels.resize(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) batch.labels[i] = dataset.labels[rows[i]];

      const BatchCodes codes = compute_codes(result.head, result.prototypes, batch, spec);
      const ObjectiveGrad grad = evaluate_objective(result.head, result.prototypes, batch, codes, spec);
      if (!finite(grad.loss)) throw TrainingDiverged(step);

      const double lr = cosine_lr(spec.learning_rate, step, total_steps);
      result.head.w1 -= lr * grad.head.w1;
      result.head.b1 -= lr * grad.head.b1;
      result.head.w2 -= lr * grad.head.w2;
      result.head.b2 -= lr * grad.head.b2;
      result.prototypes.c -= lr * grad.prototypes;
      result.prototypes.renormalize();

      record.loss.total += grad.loss.total;
      record.loss.sup += grad.loss.sup;
      record.loss.js += grad.loss.js;
      record.loss.swap += grad.loss.swap;
      if (options.on_step) options.on_step(step, result.head, result.prototypes);
      ++step;
    }
    const auto steps = static_cast<double>(batches_per_epoch);
    record.loss.total /= steps;
    record.loss.sup /= steps;
    record.loss.js /= steps;
    record.loss.swap /= steps;
    result.history.push_back(record);
  }
  return result;
}

Matrix embed(const EmbeddingDataset& dataset, const ProjectionHead& head) {
  return head.forward(dataset.features);
}

}  // namespace gcd
