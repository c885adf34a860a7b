#pragma once

#include <cstdint>

#include "gcd/types.hpp"

namespace gcd {

struct HeadGrad;

// MLP projection D -> H -> D' with a tanh hidden layer and L2-normalized
// output rows.
struct ProjectionHead {
  Matrix w1;  // H x D
  Vector b1;  // H
  Matrix w2;  // D' x H
  Vector b2;  // D'

  // Intermediate activations kept by forward() for backward().
  struct Cache {
    Matrix hidden;  // tanh(X W1^T + b1), B x H
    Matrix z;       // normalized output, B x D'
    Vector norms;   // ||y_i|| before normalization
  };

  static ProjectionHead initialize(Eigen::Index in_dim, Eigen::Index hidden_dim,
                                   Eigen::Index out_dim, std::uint64_t seed);

  Eigen::Index in_dim() const { return w1.cols(); }
  Eigen::Index hidden_dim() const { return w1.rows(); }
  Eigen::Index out_dim() const { return w2.rows(); }
  Eigen::Index parameter_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

  Matrix forward(const Matrix& x) const;
  Matrix forward(const Matrix& x, Cache& cache) const;
  // Gradient of a scalar loss with respect to the parameters given
  // d loss / d Z for the rows that produced `cache`.
  HeadGrad backward(const Matrix& x, const Cache& cache, const Matrix& grad_z) const;
};

struct HeadGrad {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;

  static HeadGrad zeros_like(const ProjectionHead& head);
  HeadGrad& operator+=(const HeadGrad& other);
};

}  // namespace gcd
