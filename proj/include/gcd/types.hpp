#pragma once

#include <Eigen/Dense>

namespace gcd {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using IndexVector = VectorX<int>;

// Normalizes every row to unit L2 norm in place.
template <typename Derived>
void normalize_rows(Eigen::MatrixBase<Derived>& m) {
  m.rowwise().normalize();
}

}  // namespace gcd
