#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ssidepth/grid.hpp"

namespace ssidepth {

// Scalar loss plus its gradient with respect to the prediction grid. The
// gradient has the prediction's shape and is exactly 0 at invalid pixels.
struct LossResult {
  double value = 0.0;
  Grid grad;
};

struct TrimConfig {
  // Fraction of largest residuals discarded per image.
  double trim_fraction = 0.2;
};

struct GradMatchConfig {
  // Number of scales; level k uses stride 2^(k-1).
  int levels = 4;
};

enum class BaseLoss { ssimse, ssimae, ssitrim };
enum class Aligner { lsq, robust };

struct TotalLossConfig {
  double alpha = 0.5;
  BaseLoss base = BaseLoss::ssitrim;
};

struct OrdinalConfig {
  std::size_t num_pairs = 5000;
  // Pairs whose (offset) ground-truth ratio is within this bound are "equal".
  double ratio_threshold = 1.02;
  std::uint64_t seed = 0;
};

struct OrdinalPair {
  std::size_t i = 0;
  std::size_t j = 0;
  int label = 0;  // +1: gt_i > gt_j, -1: gt_i < gt_j, 0: roughly equal
};

// Number of residuals kept by the trimmed loss: floor((1 - f) * M).
std::size_t trimmed_count(std::size_t valid, const TrimConfig& cfg);

// Least-squares aligned MSE: (1/2M) sum (s*d_i + t - d*_i)^2. The gradient
// holds (s, t) at the optimum, which is exact because they minimise the same
// sum.
LossResult ssimse(const Grid& pred, const Grid& gt, const Mask& mask);

// MAE between the median/MAD-normalised prediction and ground truth,
// (1/2M) sum |p_i - g_i|. The gradient differentiates through the
// prediction's own median and mean absolute deviation.
LossResult ssimae(const Grid& pred, const Grid& gt, const Mask& mask);

// As ssimae but only the trimmed_count() smallest absolute residuals enter the
// sum; the normaliser stays 1/2M. Residual order is (|r|, flat index), and
// the selection is treated as constant when differentiating.
LossResult ssitrim(const Grid& pred, const Grid& gt, const Mask& mask,
                   const TrimConfig& cfg = {});

// Multi-scale gradient matching on the aligned residual field R:
// (1/M) sum_k sum_i |grad_x R^k_i| + |grad_y R^k_i|, M the full-resolution
// valid count. Levels whose stride exceeds both extents contribute 0.
LossResult gradient_matching(const Grid& pred, const Grid& gt, const Mask& mask,
                             const GradMatchConfig& cfg, Aligner aligner);

// base + alpha * gradient_matching, with the regulariser reusing the base
// loss's alignment (least squares for ssimse, robust for the others).
LossResult total_loss(const Grid& pred, const Grid& gt, const Mask& mask,
                      const TotalLossConfig& cfg, const TrimConfig& trim = {},
                      const GradMatchConfig& gm = {});

// Scale-invariant log-depth loss on depth grids. The inner minimum over the
// log-scale is taken in closed form, giving (1/2M) sum (r_i - mean r)^2 with
// r = log z - log z*.
LossResult silog(const Grid& pred_depth, const Grid& gt_depth, const Mask& mask);

// Pairs of distinct valid pixels drawn from cfg.seed with labels from the
// ground-truth ratio test. Ground truth is shifted to a minimum of 1e-6 first
// when it has nonpositive valid values.
std::vector<OrdinalPair> ordinal_pairs(const Grid& gt, const Mask& mask,
                                       const OrdinalConfig& cfg);

// Per-pair ordinal penalty on diff = pred_i - pred_j.
double ordinal_term(double diff, int label);

// Mean ordinal penalty over ordinal_pairs(gt, mask, cfg).
LossResult ordinal(const Grid& pred, const Grid& gt, const Mask& mask,
                   const OrdinalConfig& cfg);

// Normalised multi-scale gradient loss,
// sum_k sum_i |s grad^k pred - grad^k gt| over both axes, with one scale
// s = <gp, gt> / <gp, gp> fitted over all valid gradient components. The
// gradient includes the dependence of s on the prediction.
LossResult nmg(const Grid& pred, const Grid& gt, const Mask& mask,
               const GradMatchConfig& cfg);

// The scale used by nmg(); exposed for testing.
double nmg_scale(const Grid& pred, const Grid& gt, const Mask& mask,
                 const GradMatchConfig& cfg);

}  // namespace ssidepth
