#pragma once

#include <cstddef>

#include "ssidepth/grid.hpp"

namespace ssidepth {

// Affine map value -> scale * value + shift.
struct AffineAlignment {
  double scale = 1.0;
  double shift = 0.0;
};

// Median (shift) and mean absolute deviation about the median (scale).
struct RobustStats {
  double shift = 0.0;
  double scale = 0.0;
};

// Least-squares scale and shift taking `pred` onto `gt` over valid pixels:
// argmin_{s,t} sum (s*pred_i + t - gt_i)^2, solved from the centered 2x2
// normal equations in long double.
//
// Throws insufficient_data when fewer than two pixels are valid and
// degenerate_alignment when det(normal matrix) < 1e-12 * M^2, i.e. when the
// prediction is (numerically) constant over the valid set.
AffineAlignment lsq_align(const Grid& pred, const Grid& gt, const Mask& mask);

Grid apply_alignment(const Grid& grid, const AffineAlignment& a);

RobustStats robust_stats(const Grid& grid, const Mask& mask);

// (value - median) / mean_abs_dev at every pixel. Invalid pixels are mapped
// with the same formula; callers mask them out. Throws degenerate_scale when
// the deviation is zero.
Grid robust_normalize(const Grid& grid, const Mask& mask);

// Flat indices of the element(s) that determine the masked median: the middle
// element for an odd count (lower == upper) and the central pair otherwise.
// Order ties are broken by flat index.
struct MedianSupport {
  std::size_t lower = 0;
  std::size_t upper = 0;
};
MedianSupport median_support(const Grid& grid, const Mask& mask);

}  // namespace ssidepth
