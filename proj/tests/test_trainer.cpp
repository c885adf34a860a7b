#include <atomic>
#include <random>

#include "doctest.h"
#include "gcd/dataset.hpp"
#include "gcd/trainer.hpp"
#include "oracles.hpp"
#include "param_pack.hpp"

using gcd::Matrix;
using gcd::Vector;
using namespace gcd::test;

namespace {

gcd::EmbeddingDataset two_blob_split(std::uint64_t seed) {
  gcd::SynthSpec synth;
  synth.num_classes = 4;
  synth.points_per_class = 12;
  synth.dim = 8;
  synth.center_separation = 1.0;
  synth.cluster_stddev = 0.05;
  synth.seed = seed;
  return gcd::make_split(gcd::generate_synthetic(synth), {0.5, 0.5, seed});
}

gcd::TrainSpec tiny_spec() {
  gcd::TrainSpec spec;
  spec.batch_size = 16;
  spec.epochs = 3;
  spec.k_proto = 6;
  spec.hidden_dim = 8;
  spec.out_dim = 4;
  spec.seed = 7;
  return spec;
}

}  // namespace

TEST_CASE("total objective gradient matches finite differences over all parameters") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 6; ++trial) {
    gcd::TrainSpec spec;
    spec.hidden_dim = 5;
    spec.out_dim = 3;
    spec.k_proto = 3;
    spec.seed = static_cast<std::uint64_t>(trial);
    spec.alpha = 0.3 + 0.1 * trial;
    auto model = gcd::initialize_model(4, spec);
    // Non-zero biases so every parameter block is exercised.
    for (Eigen::Index i = 0; i < model.head.b1.size(); ++i) model.head.b1[i] = 0.1 * normal(rng);
    for (Eigen::Index i = 0; i < model.head.b2.size(); ++i) model.head.b2[i] = 0.1 * normal(rng);

    const int b = 2 + 2 * (trial % 3);  // B <= 8
    gcd::Batch batch;
    batch.weak.resize(b, 4);
    batch.strong.resize(b, 4);
    for (Eigen::Index i = 0; i < batch.weak.size(); ++i) {
      batch.weak(i) = normal(rng);
      batch.strong(i) = batch.weak(i) + 0.3 * normal(rng);
    }
    batch.labels.assign(b, gcd::kUnlabeled);
    batch.labels[0] = 0;
    batch.labels[1] = 1;
    if (b > 2) batch.labels[2] = 0;

    const auto codes = gcd::compute_codes(model.head, model.prototypes, batch, spec);
    const auto analytic = gcd::evaluate_objective(model.head, model.prototypes, batch, codes, spec);

    gcd::ProjectionHead head = model.head;
    gcd::PrototypeBank protos = model.prototypes;
    const Matrix fd = finite_difference(
        [&](const Matrix& flat) {
          unpack(flat, head, protos);
          return gcd::evaluate_objective(head, protos, batch, codes, spec).loss.total;
        },
        pack(model.head, model.prototypes));

    CHECK(relative_error(pack(analytic), fd) <= 1e-4);
  }
}

TEST_CASE("epochs = 0 returns the initialized model with empty history") {
  const auto data = two_blob_split(1);
  auto spec = tiny_spec();
  spec.epochs = 0;
  const auto result = gcd::train(data, spec);
  const auto init = gcd::initialize_model(data.dim(), spec);
  CHECK(result.history.empty());
  CHECK(result.head.w1 == init.head.w1);
  CHECK(result.head.w2 == init.head.w2);
  CHECK(result.prototypes.c == init.prototypes.c);
}

TEST_CASE("training is deterministic and keeps prototypes on the sphere") {
  const auto data = two_blob_split(2);
  const auto spec = tiny_spec();
  double worst = 0.0;
  gcd::TrainOptions options;
  options.on_step = [&](std::int64_t, const gcd::ProjectionHead&, const gcd::PrototypeBank& p) {
    worst = std::max(worst, (p.c.rowwise().norm().array() - 1.0).abs().maxCoeff());
  };
  const auto a = gcd::train(data, spec, options);
  const auto b = gcd::train(data, spec);
  CHECK(worst <= 1e-9);
  CHECK(a.head.w1 == b.head.w1);
  CHECK(a.head.b2 == b.head.b2);
  CHECK(a.prototypes.c == b.prototypes.c);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].loss.total == b.history[i].loss.total);
}

TEST_CASE("alpha = 1 makes the swapped term inert") {
  const auto data = two_blob_split(3);
  auto spec = tiny_spec();
  spec.alpha = 1.0;
  auto zeroed = spec;
  zeroed.terms.swap = false;

  std::vector<Matrix> trajectory_a, trajectory_b;
  gcd::TrainOptions record_a, record_b;
  record_a.on_step = [&](std::int64_t step, const gcd::ProjectionHead& h, const gcd::PrototypeBank& p) {
    if (step < 3) trajectory_a.push_back(pack(h, p));
  };
  record_b.on_step = [&](std::int64_t step, const gcd::ProjectionHead& h, const gcd::PrototypeBank& p) {
    if (step < 3) trajectory_b.push_back(pack(h, p));
  };
  const auto a = gcd::train(data, spec, record_a);
  gcd::train(data, zeroed, record_b);
  REQUIRE(trajectory_a.size() == 3);
  REQUIRE(trajectory_b.size() == 3);
  for (int s = 0; s < 3; ++s) CHECK(trajectory_a[s] == trajectory_b[s]);
  // The value is still recorded.
  CHECK(a.history.front().loss.swap > 0.0);
}

TEST_CASE("loss decreases on separated blobs") {
  gcd::SynthSpec synth;
  synth.num_classes = 2;
  synth.points_per_class = 40;
  synth.dim = 8;
  synth.center_separation = 10.0;
  synth.cluster_stddev = 0.1;
  synth.seed = 4;
  const auto data = gcd::make_split(gcd::generate_synthetic(synth), {1.0, 0.5, 4});
  auto spec = tiny_spec();
  spec.epochs = 30;
  spec.k_proto = 10;
  const auto result = gcd::train(data, spec);
  REQUIRE(result.history.size() == 30);
  CHECK(result.history.back().loss.total < result.history.front().loss.total);
}

TEST_CASE("stop flag ends training early") {
  const auto data = two_blob_split(5);
  std::atomic<bool> stop{false};
  gcd::TrainOptions options;
  options.stop = &stop;
  options.on_step = [&](std::int64_t step, const gcd::ProjectionHead&, const gcd::PrototypeBank&) {
    if (step == 1) stop = true;
  };
  const auto result = gcd::train(data, tiny_spec(), options);
  CHECK_FALSE(result.completed);
}

TEST_CASE("non-finite loss aborts with the step index") {
  auto data = two_blob_split(6);
  auto spec = tiny_spec();
  spec.learning_rate = 1e300;
  CHECK_THROWS_AS(gcd::train(data, spec), gcd::TrainingDiverged);
}

TEST_CASE("train preconditions") {
  auto data = two_blob_split(7);
  SUBCASE("alpha outside [0, 1]") {
    auto spec = tiny_spec();
    spec.alpha = 1.5;
    CHECK_THROWS_AS(gcd::train(data, spec), gcd::InvalidArgument);
  }
  SUBCASE("too few labeled classes for the contrastive term") {
    data.labels.setConstant(gcd::kUnlabeled);
    CHECK_THROWS_AS(gcd::train(data, tiny_spec()), gcd::InvalidArgument);
    auto spec = tiny_spec();
    spec.terms.sup = false;
    CHECK_NOTHROW(gcd::train(data, spec));
  }
}

TEST_CASE("embed") {
  const auto data = two_blob_split(8);
  const auto model = gcd::initialize_model(data.dim(), tiny_spec());
  SUBCASE("rows are unit norm and deterministic") {
    const Matrix z = gcd::embed(data, model.head);
    CHECK((z.rowwise().norm().array() - 1.0).abs().maxCoeff() <= 1e-9);
    CHECK(z == gcd::embed(data, model.head));
  }
  SUBCASE("identical inputs give identical rows") {
    auto copy = data;
    copy.features.row(1) = copy.features.row(0);
    const Matrix z = gcd::embed(copy, model.head);
    CHECK(z.row(0) == z.row(1));
  }
  SUBCASE("zero weights give constant rows") {
    auto head = model.head;
    head.w1.setZero();
    head.w2.setZero();
    head.b2 = Vector::LinSpaced(head.out_dim(), 1.0, 2.0);
    const Matrix z = gcd::embed(data, head);
    for (Eigen::Index i = 1; i < z.rows(); ++i) CHECK(z.row(i) == z.row(0));
  }
  SUBCASE("dimension mismatch") {
    auto narrow = data;
    narrow.features = data.features.leftCols(3);
    CHECK_THROWS_AS(gcd::embed(narrow, model.head), gcd::InvalidArgument);
  }
}
