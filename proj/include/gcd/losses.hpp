#pragma once

// Loss terms of the clustering-assignment-consistency objective and the
// Sinkhorn-Knopp code solver. Every loss returns its value together with the
// analytic gradient with respect to its differentiable inputs; code matrices
// are plain values with no gradient channel (stop-gradient).

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gcd/error.hpp"
#include "gcd/types.hpp"

namespace gcd {

struct Temperatures {
  double tau_sup = 0.07;
  double tau_u = 0.05;
};

struct SinkhornSpec {
  double epsilon = 0.05;
  int n_iters = 3;
};

template <typename Scalar>
struct LossAndGrad {
  Scalar loss;
  MatrixX<Scalar> grad;
};

template <typename Scalar>
struct SwappedLoss {
  Scalar loss;
  MatrixX<Scalar> grad_weak;    // d loss / d P_w
  MatrixX<Scalar> grad_strong;  // d loss / d P_s
};

namespace detail {

template <typename Scalar>
Scalar entropy_term(Scalar p) {
  return p > Scalar(0) ? -p * std::log(p) : Scalar(0);
}

}  // namespace detail

// Supervised contrastive loss over a multiview batch. Row i's positives are
// all other rows with the same label; its denominator runs over every other
// row. Anchors without a positive are skipped; the loss is the mean over the
// remaining anchors. Similarity is the dot product of (unit) rows.
template <typename Derived>
LossAndGrad<typename Derived::Scalar> sup_con_loss(const Eigen::MatrixBase<Derived>& z,
                                                   const std::vector<int>& labels,
                                                   typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = z.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw InvalidArgument("sup_con_loss: label count does not match batch rows");
  }
  const MatrixX<Scalar> logits = (z * z.transpose()) / tau;

  // d loss / d sim, accumulated per anchor row.
  MatrixX<Scalar> g = MatrixX<Scalar>::Zero(n, n);
  Scalar total = 0;
  Eigen::Index anchors = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index positives = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i && labels[j] == labels[i]) ++positives;
    }
    if (positives == 0) continue;
    ++anchors;

    Scalar row_max = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) row_max = std::max(row_max, logits(i, j));
    }
    Scalar denom = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) denom += std::exp(logits(i, j) - row_max);
    }
    const Scalar log_denom = row_max + std::log(denom);

    Scalar positive_sum = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const bool positive = labels[j] == labels[i];
      if (positive) positive_sum += logits(i, j);
      g(i, j) = std::exp(logits(i, j) - log_denom) -
                (positive ? Scalar(1) / static_cast<Scalar>(positives) : Scalar(0));
    }
    total += log_denom - positive_sum / static_cast<Scalar>(positives);
  }
  if (anchors == 0) throw InvalidArgument("no positive pairs in batch");

  const Scalar scale = Scalar(1) / (static_cast<Scalar>(anchors) * tau);
  g *= scale;
  LossAndGrad<Scalar> out{total / static_cast<Scalar>(anchors), MatrixX<Scalar>()};
  out.grad = (g + g.transpose()) * z;
  return out;
}

// Row-wise softmax of (Z C^T) / tau: P(i, k) is the probability that row i
// belongs to prototype k.
template <typename DerivedZ, typename DerivedC>
MatrixX<typename DerivedZ::Scalar> prototype_probs(const Eigen::MatrixBase<DerivedZ>& z,
                                                   const Eigen::MatrixBase<DerivedC>& prototypes,
                                                   typename DerivedZ::Scalar tau) {
  using Scalar = typename DerivedZ::Scalar;
  MatrixX<Scalar> p = (z * prototypes.transpose()) / tau;
  const VectorX<Scalar> row_max = p.rowwise().maxCoeff();
  p.colwise() -= row_max;
  p = p.array().exp().matrix();
  const VectorX<Scalar> row_sum = p.rowwise().sum();
  p.array().colwise() /= row_sum.array();
  return p;
}

// Pulls d loss / d P back through P = softmax(S / tau) to d loss / d S.
template <typename DerivedP, typename DerivedG>
MatrixX<typename DerivedP::Scalar> softmax_backward(const Eigen::MatrixBase<DerivedP>& p,
                                                    const Eigen::MatrixBase<DerivedG>& grad_p,
                                                    typename DerivedP::Scalar tau) {
  using Scalar = typename DerivedP::Scalar;
  const VectorX<Scalar> inner = p.cwiseProduct(grad_p).rowwise().sum();
  MatrixX<Scalar> out = grad_p;
  out.colwise() -= inner;
  return p.cwiseProduct(out) / tau;
}

// Entropy-regularized equipartition codes. `scores` is K x B (prototypes by
// samples). Alternates column scaling toward 1/B and row scaling toward 1/K,
// rows last, then rescales to total mass exactly 1.
template <typename Derived>
MatrixX<typename Derived::Scalar> sinkhorn_codes(const Eigen::MatrixBase<Derived>& scores,
                                                 const SinkhornSpec& spec) {
  using Scalar = typename Derived::Scalar;
  if (!(spec.epsilon > 0.0) || spec.n_iters < 1) {
    throw InvalidArgument("sinkhorn needs epsilon > 0 and n_iters >= 1");
  }
  const Eigen::Index k = scores.rows();
  const Eigen::Index b = scores.cols();
  const Scalar eps = static_cast<Scalar>(spec.epsilon);
  const MatrixX<Scalar> kernel = ((scores.array() - scores.maxCoeff()) / eps).exp().matrix();

  VectorX<Scalar> u = VectorX<Scalar>::Ones(k);
  VectorX<Scalar> v(b);
  const Scalar row_target = Scalar(1) / static_cast<Scalar>(k);
  const Scalar col_target = Scalar(1) / static_cast<Scalar>(b);
  for (int it = 0; it < spec.n_iters; ++it) {
    v = col_target * (kernel.transpose() * u).cwiseInverse();
    u = row_target * (kernel * v).cwiseInverse();
  }
  MatrixX<Scalar> q = u.asDiagonal() * kernel * v.asDiagonal();
  q /= q.sum();
  return q;
}

// Jensen-Shannon divergence H((p+q)/2) - (H(p)+H(q))/2 with natural logs.
// Only p receives a gradient; the unconstrained partial derivative is
// returned, to be chained through the softmax by the caller.
template <typename DerivedP, typename DerivedQ>
LossAndGrad<typename DerivedP::Scalar> js_consistency_loss(const Eigen::MatrixBase<DerivedP>& p,
                                                           const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedP::Scalar;
  if (p.size() != q.size()) throw InvalidArgument("js_consistency_loss: size mismatch");
  constexpr Scalar kTiny = std::numeric_limits<Scalar>::min();
  Scalar h_mix = 0;
  Scalar h_p = 0;
  Scalar h_q = 0;
  MatrixX<Scalar> grad(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const Scalar pi = p(i);
    const Scalar qi = q(i);
    const Scalar mi = Scalar(0.5) * (pi + qi);
    h_mix += detail::entropy_term(mi);
    h_p += detail::entropy_term(pi);
    h_q += detail::entropy_term(qi);
    grad(i) = Scalar(0.5) * (std::log(std::max(pi, kTiny)) - std::log(std::max(mi, kTiny)));
  }
  return {h_mix - Scalar(0.5) * (h_p + h_q), std::move(grad)};
}

// Swapped prediction: each view predicts the other view's code. P matrices
// are B x K, code matrices K x B; each code column is multiplied by B so it
// is a distribution over prototypes. Loss is averaged over the batch.
template <typename DerivedPW, typename DerivedPS, typename DerivedQW, typename DerivedQS>
SwappedLoss<typename DerivedPW::Scalar> swapped_prediction_loss(
    const Eigen::MatrixBase<DerivedPW>& p_weak, const Eigen::MatrixBase<DerivedPS>& p_strong,
    const Eigen::MatrixBase<DerivedQW>& q_weak, const Eigen::MatrixBase<DerivedQS>& q_strong) {
  using Scalar = typename DerivedPW::Scalar;
  constexpr Scalar kFloor = Scalar(1e-12);
  const Eigen::Index b = p_weak.rows();
  const Eigen::Index k = p_weak.cols();
  if (p_strong.rows() != b || p_strong.cols() != k || q_weak.rows() != k || q_weak.cols() != b ||
      q_strong.rows() != k || q_strong.cols() != b) {
    throw InvalidArgument("swapped_prediction_loss: shape mismatch");
  }
  const Scalar batch = static_cast<Scalar>(b);
  SwappedLoss<Scalar> out{Scalar(0), MatrixX<Scalar>::Zero(b, k), MatrixX<Scalar>::Zero(b, k)};
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index c = 0; c < k; ++c) {
      const Scalar target_for_weak = q_strong(c, i) * batch;
      const Scalar target_for_strong = q_weak(c, i) * batch;
      const Scalar pw = p_weak(i, c);
      const Scalar ps = p_strong(i, c);
      out.loss -= target_for_weak * std::log(std::max(pw, kFloor));
      out.loss -= target_for_strong * std::log(std::max(ps, kFloor));
      if (pw > kFloor) out.grad_weak(i, c) = -target_for_weak / (pw * batch);
      if (ps > kFloor) out.grad_strong(i, c) = -target_for_strong / (ps * batch);
    }
  }
  out.loss /= batch;
  return out;
}

}  // namespace gcd
