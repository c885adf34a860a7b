#include <cmath>

#include "doctest.h"
#include "gcd/error.hpp"
#include "gcd/views.hpp"

using gcd::Vector;

TEST_CASE("zero noise and no masking give exact copies") {
  gcd::ViewSpec spec{0.0, 0.0, 0.0, 1};
  const Vector x = Vector::LinSpaced(8, -1.0, 1.0);
  const auto v = gcd::make_views(x, spec, 3, 5);
  CHECK(v.weak == x);
  CHECK(v.strong == x);
}

TEST_CASE("strong view masks floor(f * D) coordinates") {
  gcd::ViewSpec spec{0.0, 0.0, 0.25, 2};
  const Vector x = Vector::Constant(8, 1.0);
  for (std::uint64_t step = 0; step < 20; ++step) {
    const auto v = gcd::make_views(x, spec, 0, step);
    CHECK((v.strong.array() == 0.0).count() == 2);
  }
  spec.strong_mask_fraction = 0.3;  // floor(2.4)
  CHECK((gcd::make_views(x, spec, 0, 0).strong.array() == 0.0).count() == 2);
}

TEST_CASE("views depend only on seed, sample and step") {
  gcd::ViewSpec spec;
  spec.seed = 4;
  const Vector x = Vector::LinSpaced(6, 0.0, 1.0);
  const auto a = gcd::make_views(x, spec, 10, 2);
  const auto b = gcd::make_views(x, spec, 10, 2);
  CHECK(a.weak == b.weak);
  CHECK(a.strong == b.strong);
  CHECK_FALSE(gcd::make_views(x, spec, 11, 2).weak == a.weak);
  CHECK_FALSE(gcd::make_views(x, spec, 10, 3).weak == a.weak);

  gcd::Matrix features(2, 6);
  features.row(0) = x.transpose();
  features.row(1) = x.transpose();
  const auto [weak, strong] = gcd::make_view_batch(features, {1}, spec, 2);
  CHECK(weak.row(0) == gcd::make_views(x, spec, 1, 2).weak.transpose());
  CHECK(strong.row(0) == gcd::make_views(x, spec, 1, 2).strong.transpose());
}

TEST_CASE("view noise is centered with the configured spread") {
  gcd::ViewSpec spec{0.02, 0.15, 0.0, 0};
  const Vector x = Vector::Constant(4, 0.5);
  constexpr int kDraws = 10000;
  Vector weak_sum = Vector::Zero(4);
  Vector strong_sum = Vector::Zero(4);
  double weak_sq = 0.0;
  double strong_sq = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    const auto v = gcd::make_views(x, spec, static_cast<std::uint64_t>(i), 0);
    weak_sum += v.weak - x;
    strong_sum += v.strong - x;
    weak_sq += (v.weak - x).squaredNorm();
    strong_sq += (v.strong - x).squaredNorm();
  }
  // Mean of 10^4 draws lies within 3 standard errors.
  CHECK((weak_sum / kDraws).cwiseAbs().maxCoeff() <= 3.0 * 0.02 / 100.0);
  CHECK((strong_sum / kDraws).cwiseAbs().maxCoeff() <= 3.0 * 0.15 / 100.0);
  CHECK(std::sqrt(weak_sq / (4.0 * kDraws)) == doctest::Approx(0.02).epsilon(0.05));
  CHECK(std::sqrt(strong_sq / (4.0 * kDraws)) == doctest::Approx(0.15).epsilon(0.05));
}

TEST_CASE("strong views distort more than weak views on average") {
  const gcd::ViewSpec spec;
  const Vector x = Vector::LinSpaced(16, -1.0, 1.0);
  double weak = 0.0;
  double strong = 0.0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto v = gcd::make_views(x, spec, i, 0);
    weak += (v.weak - x).norm();
    strong += (v.strong - x).norm();
  }
  CHECK(strong > weak);
}

TEST_CASE("invalid view specs") {
  CHECK_THROWS_AS((gcd::ViewSpec{0.2, 0.1, 0.0, 0}.validate()), gcd::InvalidArgument);
  CHECK_THROWS_AS((gcd::ViewSpec{-0.1, 0.1, 0.0, 0}.validate()), gcd::InvalidArgument);
  CHECK_THROWS_AS((gcd::ViewSpec{0.0, 0.1, 1.0, 0}.validate()), gcd::InvalidArgument);
}
