#pragma once

// Independent reference implementations used to check the library. They are
// deliberately naive: full sorts instead of selection, exhaustive grids
// instead of closed forms, explicit loops instead of shared helpers.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ssidepth/eval.hpp"
#include "ssidepth/grid.hpp"
#include "ssidepth/random.hpp"

namespace oracle {

using ssidepth::Grid;
using ssidepth::Mask;

double sorted_median(std::vector<double> v);

struct Frame {
  double shift = 0.0;
  double scale = 0.0;
};
// Median via full sort and mean absolute deviation about it.
Frame robust_frame(const Grid& g, const Mask& m);

// Sum of squared residuals of s*pred + t against gt over valid pixels.
double lsq_cost(const Grid& pred, const Grid& gt, const Mask& m, double s, double t);

struct GridFit {
  double s = 0.0;
  double t = 0.0;
  double cost = 0.0;
};
// Exhaustive search over [lo, hi]^2: step `coarse` everywhere, then step
// `fine` over a window of +-coarse around the coarse winner.
GridFit grid_search_lsq(const Grid& pred, const Grid& gt, const Mask& m, double lo = -10.0,
                        double hi = 10.0, double coarse = 1e-2, double fine = 1e-3);

// (1/2M) sum of squared residuals after the given alignment.
double ssimse_at(const Grid& pred, const Grid& gt, const Mask& m, double s, double t);

// Residuals of independently normalised prediction and ground truth.
std::vector<double> robust_residuals(const Grid& pred, const Grid& gt, const Mask& m);

double ssimae(const Grid& pred, const Grid& gt, const Mask& m);
double ssitrim(const Grid& pred, const Grid& gt, const Mask& m, double trim_fraction);

// (1/M) sum over levels of |dx| + |dy| of the residual field, written
// directly in full-resolution indices.
double gradient_matching_of_residual(const Grid& residual, const Mask& m, int levels);

// Residual field under least-squares alignment (aligned pred - gt) or robust
// normalisation of both sides.
Grid lsq_residual(const Grid& pred, const Grid& gt, const Mask& m);
Grid robust_residual(const Grid& pred, const Grid& gt, const Mask& m);

double silog(const Grid& z, const Grid& z_star, const Mask& m);

// Valid gradient components (prediction, ground truth) at every level.
void nmg_components(const Grid& pred, const Grid& gt, const Mask& m, int levels,
                    std::vector<double>& gp, std::vector<double>& gt_out);
double nmg(const Grid& pred, const Grid& gt, const Mask& m, int levels);

// Central differences of f at the valid pixels of `at`; invalid pixels get 0.
Grid numeric_gradient(const std::function<double(const Grid&)>& f, const Grid& at, const Mask& m,
                      double h = 1e-5);

// Max over components with max(|a|, |n|) > floor of |a - n| / max(|a|, |n|).
double max_relative_error(const Grid& analytic, const Grid& numeric, const Mask& m,
                          double floor = 1e-8);

// Minimum of |sum_l w_l g_l|^2 over the simplex grid of the given step
// (L = 1, 2 or 3).
double simplex_grid_min(const std::vector<std::vector<double>>& grads, double step = 0.01);
double objective(const std::vector<std::vector<double>>& grads, std::span<const double> w);

// Pair-by-pair disagreement count.
double whdr(const Grid& pred, const std::vector<ssidepth::OrdinalAnnotation>& a);

// Random grid with values uniform in [lo, hi).
Grid random_grid(std::size_t rows, std::size_t cols, ssidepth::Rng& rng, double lo = 0.1,
                 double hi = 2.0);
// Random mask with each pixel valid with probability p, redrawn until at
// least `min_fraction` of the pixels are valid.
Mask random_mask(std::size_t rows, std::size_t cols, ssidepth::Rng& rng, double p = 0.8,
                 double min_fraction = 0.6);

// Smallest distance of any kink argument of the robust losses from its kink:
// gaps between sorted valid predictions around the median, |pred - median|,
// |normalised residual|, the trim cutoff gap, and |edge difference| of the
// residual field at each gradient-matching level (levels = 0 skips those).
double robust_kink_margin(const Grid& pred, const Grid& gt, const Mask& m, double trim_fraction,
                          int levels);
// Smallest |edge difference| of the least-squares residual field.
double lsq_kink_margin(const Grid& pred, const Grid& gt, const Mask& m, int levels);
// Smallest |s * gp - gt| over nmg components.
double nmg_kink_margin(const Grid& pred, const Grid& gt, const Mask& m, int levels);

}  // namespace oracle
