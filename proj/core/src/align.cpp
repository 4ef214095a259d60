#include "ssidepth/align.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ssidepth/error.hpp"

namespace ssidepth {

AffineAlignment lsq_align(const Grid& pred, const Grid& gt, const Mask& mask) {
  require_same_shape(pred, gt, "lsq_align");
  require_same_shape(pred, mask, "lsq_align");

  long double n = 0, sum_p = 0, sum_g = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    n += 1;
    sum_p += pred[i];
    sum_g += gt[i];
  }
  if (n < 2) {
    throw Error(ErrorKind::insufficient_data, "lsq_align: need at least 2 valid pixels");
  }
  const long double mean_p = sum_p / n;
  const long double mean_g = sum_g / n;
  long double spp = 0, spg = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    const long double dp = pred[i] - mean_p;
    spp += dp * dp;
    spg += dp * (gt[i] - mean_g);
  }
  // det [[sum p^2, sum p], [sum p, M]] = M * spp
  if (n * spp < 1e-12L * n * n) {
    throw Error(ErrorKind::degenerate_alignment, "lsq_align: prediction is constant");
  }
  const long double s = spg / spp;
  const long double t = mean_g - s * mean_p;
  return {static_cast<double>(s), static_cast<double>(t)};
}

Grid apply_alignment(const Grid& grid, const AffineAlignment& a) {
  Grid out = grid;
  for (double& v : out.values()) v = a.scale * v + a.shift;
  return out;
}

RobustStats robust_stats(const Grid& grid, const Mask& mask) {
  require_same_shape(grid, mask, "robust_stats");
  const double t = masked_reduce(grid, mask, Reduction::median);
  const double s = masked_reduce(grid, mask, Reduction::mean_abs_dev, t);
  return {t, s};
}

Grid robust_normalize(const Grid& grid, const Mask& mask) {
  const RobustStats st = robust_stats(grid, mask);
  if (!(st.scale > 0.0)) {
    throw Error(ErrorKind::degenerate_scale, "robust_normalize: zero absolute deviation");
  }
  Grid out = grid;
  for (double& v : out.values()) v = (v - st.shift) / st.scale;
  return out;
}

MedianSupport median_support(const Grid& grid, const Mask& mask) {
  require_same_shape(grid, mask, "median_support");
  std::vector<std::size_t> idx = mask.valid_indices();
  if (idx.empty()) throw Error(ErrorKind::empty_mask, "median_support: no valid pixels");
  const std::size_t n = idx.size();
  auto less = [&](std::size_t a, std::size_t b) {
    return grid[a] < grid[b] || (grid[a] == grid[b] && a < b);
  };
  const auto hi = idx.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(idx.begin(), hi, idx.end(), less);
  if (n % 2 == 1) return {*hi, *hi};
  const auto lo = std::max_element(idx.begin(), hi, less);
  return {*lo, *hi};
}

}  // namespace ssidepth
