#include "gcd/head.hpp"

#include <cmath>
#include <random>

#include "gcd/error.hpp"

namespace gcd {

ProjectionHead ProjectionHead::initialize(Eigen::Index in_dim, Eigen::Index hidden_dim,
                                          Eigen::Index out_dim, std::uint64_t seed) {
  if (in_dim < 1 || hidden_dim < 1 || out_dim < 2) {
    throw InvalidArgument("projection head needs positive dims and out_dim >= 2");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](Matrix& m, double scale) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = scale * normal(rng);
    }
  };
  ProjectionHead head;
  head.w1.resize(hidden_dim, in_dim);
  head.w2.resize(out_dim, hidden_dim);
  fill(head.w1, 1.0 / std::sqrt(static_cast<double>(in_dim)));
  fill(head.w2, 1.0 / std::sqrt(static_cast<double>(hidden_dim)));
  head.b1 = Vector::Zero(hidden_dim);
  head.b2 = Vector::Zero(out_dim);
  return head;
}

Matrix ProjectionHead::forward(const Matrix& x) const {
  Cache cache;
  return forward(x, cache);
}

Matrix ProjectionHead::forward(const Matrix& x, Cache& cache) const {
  if (x.cols() != in_dim()) {
    throw InvalidArgument("input dimension " + std::to_string(x.cols()) +
                          " does not match head input " + std::to_string(in_dim()));
  }
  cache.hidden = ((x * w1.transpose()).rowwise() + b1.transpose()).array().tanh().matrix();
  Matrix y = (cache.hidden * w2.transpose()).rowwise() + b2.transpose();
  cache.norms = y.rowwise().norm();
  cache.z = y.array().colwise() / cache.norms.array();
  return cache.z;
}

HeadGrad ProjectionHead::backward(const Matrix& x, const Cache& cache, const Matrix& grad_z) const {
  // z = y / ||y||  =>  dy = (dz - z <z, dz>) / ||y||
  const Vector radial = cache.z.cwiseProduct(grad_z).rowwise().sum();
  Matrix grad_y = grad_z - (cache.z.array().colwise() * radial.array()).matrix();
  grad_y.array().colwise() /= cache.norms.array();

  HeadGrad g;
  g.w2 = grad_y.transpose() * cache.hidden;
  g.b2 = grad_y.colwise().sum().transpose();
  const Matrix grad_pre =
      (grad_y * w2).cwiseProduct((1.0 - cache.hidden.array().square()).matrix());
  g.w1 = grad_pre.transpose() * x;
  g.b1 = grad_pre.colwise().sum().transpose();
  return g;
}

HeadGrad HeadGrad::zeros_like(const ProjectionHead& head) {
  return {Matrix::Zero(head.w1.rows(), head.w1.cols()), Vector::Zero(head.b1.size()),
          Matrix::Zero(head.w2.rows(), head.w2.cols()), Vector::Zero(head.b2.size())};
}

HeadGrad& HeadGrad::operator+=(const HeadGrad& other) {
  w1 += other.w1;
  b1 += other.b1;
  w2 += other.w2;
  b2 += other.b2;
  return *this;
}

}  // namespace gcd
