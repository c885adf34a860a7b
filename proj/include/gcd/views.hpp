#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gcd/types.hpp"

namespace gcd {

// Feature-space stand-ins for weak and strong image augmentation.
struct ViewSpec {
  double weak_noise_sigma = 0.02;
  double strong_noise_sigma = 0.15;
  double strong_mask_fraction = 0.25;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ViewPair {
  Vector weak;
  Vector strong;
};

// weak = x + N(0, weak_sigma^2 I); strong = x + N(0, strong_sigma^2 I) with
// floor(strong_mask_fraction * D) coordinates zeroed. Output depends only on
// (spec.seed, sample_id, step).
ViewPair make_views(const Eigen::Ref<const Vector>& x, const ViewSpec& spec,
                    std::uint64_t sample_id, std::uint64_t step);

// Views for a set of rows of `features`, stacked as two |rows| x D matrices.
std::pair<Matrix, Matrix> make_view_batch(const Matrix& features,
                                          const std::vector<Eigen::Index>& rows,
                                          const ViewSpec& spec, std::uint64_t step);

}  // namespace gcd
