#include "gcd/views.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "gcd/error.hpp"

namespace gcd {

void ViewSpec::validate() const {
  if (!(weak_noise_sigma >= 0.0) || !(strong_noise_sigma >= weak_noise_sigma)) {
    throw InvalidArgument("view noise needs 0 <= weak_noise_sigma <= strong_noise_sigma");
  }
  if (!(strong_mask_fraction >= 0.0 && strong_mask_fraction < 1.0)) {
    throw InvalidArgument("strong_mask_fraction must lie in [0, 1)");
  }
}

ViewPair make_views(const Eigen::Ref<const Vector>& x, const ViewSpec& spec,
                    std::uint64_t sample_id, std::uint64_t step) {
  const auto d = x.size();
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(sample_id), static_cast<std::uint32_t>(sample_id >> 32),
                    static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);

  ViewPair out{x, x};
  for (Eigen::Index i = 0; i < d; ++i) out.weak[i] += spec.weak_noise_sigma * normal(rng);
  for (Eigen::Index i = 0; i < d; ++i) out.strong[i] += spec.strong_noise_sigma * normal(rng);

  const auto masked = static_cast<Eigen::Index>(std::floor(spec.strong_mask_fraction * static_cast<double>(d)));
  if (masked > 0) {
    // Partial Fisher-Yates: the first `masked` slots are a uniform sample
    // without replacement.
    std::vector<Eigen::Index> order(d);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    for (Eigen::Index i = 0; i < masked; ++i) {
      std::uniform_int_distribution<Eigen::Index> pick(i, d - 1);
      std::swap(order[i], order[pick(rng)]);
      out.strong[order[i]] = 0.0;
    }
  }
  return out;
}

std::pair<Matrix, Matrix> make_view_batch(const Matrix& features,
                                          const std::vector<Eigen::Index>& rows,
                                          const ViewSpec& spec, std::uint64_t step) {
  const auto b = static_cast<Eigen::Index>(rows.size());
  Matrix weak(b, features.cols());
  Matrix strong(b, features.cols());
  for (Eigen::Index i = 0; i < b; ++i) {
    const Vector x = features.row(rows[i]).transpose();
    auto views = make_views(x, spec, static_cast<std::uint64_t>(rows[i]), step);
    weak.row(i) = views.weak.transpose();
    strong.row(i) = views.strong.transpose();
  }
  return {std::move(weak), std::move(strong)};
}

}  // namespace gcd
