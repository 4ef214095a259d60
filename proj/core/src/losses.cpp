#include "ssidepth/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ssidepth/align.hpp"
#include "ssidepth/error.hpp"
#include "ssidepth/random.hpp"

namespace ssidepth {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_inputs(const Grid& pred, const Grid& gt, const Mask& mask, const char* name) {
  require_same_shape(pred, gt, name);
  require_same_shape(pred, mask, name);
}

// Least-squares frame of the prediction plus the centred moments needed to
// differentiate (s, t) with respect to the prediction.
struct LsqFrame {
  AffineAlignment align;
  double mean_pred = 0.0;
  double mean_gt = 0.0;
  double centered_ss = 0.0;  // sum (d - mean)^2
  double valid = 0.0;
};

LsqFrame make_lsq_frame(const Grid& pred, const Grid& gt, const Mask& mask) {
  LsqFrame f;
  f.align = lsq_align(pred, gt, mask);
  long double n = 0, sp = 0, sg = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    n += 1;
    sp += pred[i];
    sg += gt[i];
  }
  f.valid = static_cast<double>(n);
  f.mean_pred = static_cast<double>(sp / n);
  f.mean_gt = static_cast<double>(sg / n);
  long double ss = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    const long double d = pred[i] - f.mean_pred;
    ss += d * d;
  }
  f.centered_ss = static_cast<double>(ss);
  return f;
}

// Pulls dL/dR back to dL/dpred for R = s*d + t - gt with (s, t) the
// least-squares solution, itself a function of d.
Grid chain_lsq(const Grid& pred, const Grid& gt, const Mask& mask, const LsqFrame& f,
               const Grid& dl_dr) {
  const double s = f.align.scale;
  double a = 0.0;  // sum G_j d_j
  double b = 0.0;  // sum G_j
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    a += dl_dr[i] * pred[i];
    b += dl_dr[i];
  }
  const double coupling = a - b * f.mean_pred;
  Grid grad(pred.rows(), pred.cols(), 0.0);
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (!mask[k]) continue;
    const double ds = ((gt[k] - f.mean_gt) - 2.0 * s * (pred[k] - f.mean_pred)) / f.centered_ss;
    grad[k] = s * dl_dr[k] + coupling * ds - b * s / f.valid;
  }
  return grad;
}

// Median/MAD frame of the prediction.
struct RobustFrame {
  RobustStats stats;
  MedianSupport median;
  Grid normalized;
  double valid = 0.0;
};

RobustFrame make_robust_frame(const Grid& pred, const Mask& mask) {
  RobustFrame f;
  f.normalized = robust_normalize(pred, mask);
  f.stats = robust_stats(pred, mask);
  f.median = median_support(pred, mask);
  f.valid = static_cast<double>(mask.count());
  return f;
}

// Pulls dL/dp back to dL/dpred for p = (d - median(d)) / mad(d).
Grid chain_robust(const Grid& pred, const Mask& mask, const RobustFrame& f, const Grid& dl_dp) {
  const double s = f.stats.scale;
  const double t = f.stats.shift;
  double w_sum = 0.0;
  double wp_sum = 0.0;
  double sigma_sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    w_sum += dl_dp[i];
    wp_sum += dl_dp[i] * f.normalized[i];
    sigma_sum += sign(pred[i] - t);
  }
  Grid median_weight(pred.rows(), pred.cols(), 0.0);
  if (f.median.lower == f.median.upper) {
    median_weight[f.median.lower] = 1.0;
  } else {
    median_weight[f.median.lower] = 0.5;
    median_weight[f.median.upper] = 0.5;
  }
  Grid grad(pred.rows(), pred.cols(), 0.0);
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (!mask[k]) continue;
    const double mu = median_weight[k];
    const double ds = (sign(pred[k] - t) - sigma_sum * mu) / f.valid;
    grad[k] = dl_dp[k] / s - w_sum * mu / s - wp_sum / s * ds;
  }
  return grad;
}

// Visits every valid forward-difference pair (a, b), flat indices into the
// full-resolution grid, for the levels 1..K of the stride-2^(k-1) pyramid.
template <typename Visit>
void for_each_level_edge(std::size_t rows, std::size_t cols, const Mask& mask, int levels,
                         Visit&& visit) {
  for (int k = 0; k < levels; ++k) {
    const std::size_t stride = std::size_t{1} << k;
    if (stride > rows && stride > cols) break;
    for (std::size_t r = 0; r < rows; r += stride) {
      for (std::size_t c = 0; c < cols; c += stride) {
        const std::size_t a = r * cols + c;
        if (!mask[a]) continue;
        if (c + stride < cols && mask[a + stride]) visit(a, a + stride);
        if (r + stride < rows && mask[a + stride * cols]) visit(a, a + stride * cols);
      }
    }
  }
}

void check_levels(const GradMatchConfig& cfg) {
  if (cfg.levels < 1 || cfg.levels > 30) {
    throw Error(ErrorKind::configuration,
                "gradient matching levels must be in [1, 30], got " + std::to_string(cfg.levels));
  }
}

// Value and dL/dR of the gradient-matching term for residual field R.
double gradient_matching_core(const Grid& residual, const Mask& mask, int levels, double valid,
                              Grid& dl_dr) {
  double total = 0.0;
  for_each_level_edge(residual.rows(), residual.cols(), mask, levels,
                      [&](std::size_t a, std::size_t b) {
                        const double diff = residual[b] - residual[a];
                        total += std::abs(diff);
                        const double g = sign(diff) / valid;
                        dl_dr[b] += g;
                        dl_dr[a] -= g;
                      });
  return total / valid;
}

Grid lsq_residual(const Grid& pred, const Grid& gt, const Mask& mask, const LsqFrame& f) {
  Grid r(pred.rows(), pred.cols(), 0.0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (mask[i]) r[i] = f.align.scale * pred[i] + f.align.shift - gt[i];
  }
  return r;
}

Grid robust_residual(const RobustFrame& f, const Grid& gt_normalized, const Mask& mask) {
  Grid r(mask.rows(), mask.cols(), 0.0);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (mask[i]) r[i] = f.normalized[i] - gt_normalized[i];
  }
  return r;
}

// Base robust loss value; accumulates d(value)/d(normalized pred) into dl_dp.
double robust_base(const Grid& residual, const Mask& mask, std::size_t keep, double valid,
                   Grid& dl_dp) {
  std::vector<std::size_t> idx = mask.valid_indices();
  if (keep < idx.size()) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(residual[a]) < std::abs(residual[b]);
    });
    idx.resize(keep);
  }
  double total = 0.0;
  for (std::size_t i : idx) {
    total += std::abs(residual[i]);
    dl_dp[i] += sign(residual[i]) / (2.0 * valid);
  }
  return total / (2.0 * valid);
}

LossResult robust_loss(const Grid& pred, const Grid& gt, const Mask& mask,
                       std::size_t keep, double alpha, int levels) {
  const RobustFrame f = make_robust_frame(pred, mask);
  const Grid gt_hat = robust_normalize(gt, mask);
  const Grid residual = robust_residual(f, gt_hat, mask);
  Grid dl_dp(pred.rows(), pred.cols(), 0.0);
  double value = robust_base(residual, mask, keep, f.valid, dl_dp);
  if (alpha != 0.0) {
    Grid dreg(pred.rows(), pred.cols(), 0.0);
    value += alpha * gradient_matching_core(residual, mask, levels, f.valid, dreg);
    for (std::size_t i = 0; i < dl_dp.size(); ++i) dl_dp[i] += alpha * dreg[i];
  }
  return {value, chain_robust(pred, mask, f, dl_dp)};
}

void require_positive_valid(const Grid& g, const Mask& mask, const char* what) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (mask[i] && !(g[i] > 0.0)) {
      throw Error(ErrorKind::domain, std::string(what) + " must be strictly positive at valid pixel " +
                                         std::to_string(i));
    }
  }
}

}  // namespace

std::size_t trimmed_count(std::size_t valid, const TrimConfig& cfg) {
  if (!(cfg.trim_fraction >= 0.0 && cfg.trim_fraction < 1.0)) {
    throw Error(ErrorKind::configuration, "trim_fraction must lie in [0, 1)");
  }
  // The epsilon keeps e.g. 0.8 * 10 from flooring to 7.
  const double kept = (1.0 - cfg.trim_fraction) * static_cast<double>(valid);
  return static_cast<std::size_t>(std::floor(kept + 1e-9));
}

LossResult ssimse(const Grid& pred, const Grid& gt, const Mask& mask) {
  check_inputs(pred, gt, mask, "ssimse");
  const LsqFrame f = make_lsq_frame(pred, gt, mask);
  const Grid r = lsq_residual(pred, gt, mask, f);
  double total = 0.0;
  Grid grad(pred.rows(), pred.cols(), 0.0);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!mask[i]) continue;
    total += r[i] * r[i];
    grad[i] = f.align.scale * r[i] / f.valid;
  }
  return {total / (2.0 * f.valid), std::move(grad)};
}

LossResult ssimae(const Grid& pred, const Grid& gt, const Mask& mask) {
  check_inputs(pred, gt, mask, "ssimae");
  return robust_loss(pred, gt, mask, mask.count(), 0.0, 1);
}

LossResult ssitrim(const Grid& pred, const Grid& gt, const Mask& mask, const TrimConfig& cfg) {
  check_inputs(pred, gt, mask, "ssitrim");
  const std::size_t keep = trimmed_count(mask.count(), cfg);
  if (keep < 1) {
    throw Error(ErrorKind::insufficient_data, "ssitrim: trimming leaves no residuals");
  }
  return robust_loss(pred, gt, mask, keep, 0.0, 1);
}

LossResult gradient_matching(const Grid& pred, const Grid& gt, const Mask& mask,
                             const GradMatchConfig& cfg, Aligner aligner) {
  check_inputs(pred, gt, mask, "gradient_matching");
  check_levels(cfg);
  Grid dl_dr(pred.rows(), pred.cols(), 0.0);
  if (aligner == Aligner::lsq) {
    const LsqFrame f = make_lsq_frame(pred, gt, mask);
    const Grid r = lsq_residual(pred, gt, mask, f);
    const double value = gradient_matching_core(r, mask, cfg.levels, f.valid, dl_dr);
    return {value, chain_lsq(pred, gt, mask, f, dl_dr)};
  }
  const RobustFrame f = make_robust_frame(pred, mask);
  const Grid r = robust_residual(f, robust_normalize(gt, mask), mask);
  const double value = gradient_matching_core(r, mask, cfg.levels, f.valid, dl_dr);
  return {value, chain_robust(pred, mask, f, dl_dr)};
}

LossResult total_loss(const Grid& pred, const Grid& gt, const Mask& mask,
                      const TotalLossConfig& cfg, const TrimConfig& trim,
                      const GradMatchConfig& gm) {
  check_inputs(pred, gt, mask, "total_loss");
  check_levels(gm);
  if (!(cfg.alpha >= 0.0)) throw Error(ErrorKind::configuration, "alpha must be >= 0");

  switch (cfg.base) {
    case BaseLoss::ssimse: {
      const LsqFrame f = make_lsq_frame(pred, gt, mask);
      const Grid r = lsq_residual(pred, gt, mask, f);
      double base = 0.0;
      Grid grad(pred.rows(), pred.cols(), 0.0);
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (!mask[i]) continue;
        base += r[i] * r[i];
        grad[i] = f.align.scale * r[i] / f.valid;
      }
      base /= 2.0 * f.valid;
      if (cfg.alpha == 0.0) return {base, std::move(grad)};
      Grid dl_dr(pred.rows(), pred.cols(), 0.0);
      const double reg = gradient_matching_core(r, mask, gm.levels, f.valid, dl_dr);
      const Grid reg_grad = chain_lsq(pred, gt, mask, f, dl_dr);
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += cfg.alpha * reg_grad[i];
      return {base + cfg.alpha * reg, std::move(grad)};
    }
    case BaseLoss::ssimae:
      return robust_loss(pred, gt, mask, mask.count(), cfg.alpha, gm.levels);
    case BaseLoss::ssitrim: {
      const std::size_t keep = trimmed_count(mask.count(), trim);
      if (keep < 1) {
        throw Error(ErrorKind::insufficient_data, "ssitrim: trimming leaves no residuals");
      }
      return robust_loss(pred, gt, mask, keep, cfg.alpha, gm.levels);
    }
  }
  throw Error(ErrorKind::configuration, "unknown base loss");
}

LossResult silog(const Grid& pred_depth, const Grid& gt_depth, const Mask& mask) {
  check_inputs(pred_depth, gt_depth, mask, "silog");
  require_positive_valid(pred_depth, mask, "silog: predicted depth");
  require_positive_valid(gt_depth, mask, "silog: ground-truth depth");
  const std::size_t n = mask.count();
  if (n == 0) throw Error(ErrorKind::empty_mask, "silog: no valid pixels");
  const double valid = static_cast<double>(n);

  Grid r(pred_depth.rows(), pred_depth.cols(), 0.0);
  double mean = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!mask[i]) continue;
    r[i] = std::log(pred_depth[i]) - std::log(gt_depth[i]);
    mean += r[i];
  }
  mean /= valid;
  double total = 0.0;
  Grid grad(r.rows(), r.cols(), 0.0);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!mask[i]) continue;
    const double c = r[i] - mean;
    total += c * c;
    grad[i] = c / (valid * pred_depth[i]);
  }
  return {total / (2.0 * valid), std::move(grad)};
}

std::vector<OrdinalPair> ordinal_pairs(const Grid& gt, const Mask& mask, const OrdinalConfig& cfg) {
  require_same_shape(gt, mask, "ordinal_pairs");
  if (!(cfg.ratio_threshold > 1.0)) {
    throw Error(ErrorKind::configuration, "ordinal ratio_threshold must exceed 1");
  }
  const std::vector<std::size_t> valid = mask.valid_indices();
  if (valid.size() < 2) {
    throw Error(ErrorKind::insufficient_data, "ordinal: need at least 2 valid pixels");
  }
  double lowest = gt[valid.front()];
  for (std::size_t i : valid) lowest = std::min(lowest, gt[i]);
  const double offset = lowest > 0.0 ? 0.0 : 1e-6 - lowest;

  Rng rng(cfg.seed);
  std::vector<OrdinalPair> pairs;
  pairs.reserve(cfg.num_pairs);
  const std::size_t m = valid.size();
  for (std::size_t p = 0; p < cfg.num_pairs; ++p) {
    const std::size_t a = rng.index(m);
    std::size_t b = rng.index(m - 1);
    if (b >= a) ++b;
    const std::size_t i = valid[a];
    const std::size_t j = valid[b];
    const double gi = gt[i] + offset;
    const double gj = gt[j] + offset;
    const double ratio = std::max(gi, gj) / std::min(gi, gj);
    int label = 0;
    if (ratio > cfg.ratio_threshold) label = gi > gj ? 1 : -1;
    pairs.push_back({i, j, label});
  }
  return pairs;
}

double ordinal_term(double diff, int label) {
  if (label == 0) return diff * diff;
  // log(1 + exp(y)) for y = -label * diff, evaluated without overflow.
  const double y = -static_cast<double>(label) * diff;
  return std::max(y, 0.0) + std::log1p(std::exp(-std::abs(y)));
}

LossResult ordinal(const Grid& pred, const Grid& gt, const Mask& mask, const OrdinalConfig& cfg) {
  check_inputs(pred, gt, mask, "ordinal");
  if (cfg.num_pairs == 0) throw Error(ErrorKind::configuration, "ordinal: num_pairs must be >= 1");
  const std::vector<OrdinalPair> pairs = ordinal_pairs(gt, mask, cfg);
  const double count = static_cast<double>(pairs.size());
  long double total = 0.0L;
  Grid grad(pred.rows(), pred.cols(), 0.0);
  for (const OrdinalPair& p : pairs) {
    const double diff = pred[p.i] - pred[p.j];
    total += ordinal_term(diff, p.label);
    double d;
    if (p.label == 0) {
      d = 2.0 * diff;
    } else {
      const double l = static_cast<double>(p.label);
      // d/dx log(1 + exp(-l x)) = -l * sigmoid(-l x)
      const double y = -l * diff;
      const double sig = y >= 0.0 ? 1.0 / (1.0 + std::exp(-y)) : std::exp(y) / (1.0 + std::exp(y));
      d = -l * sig;
    }
    grad[p.i] += d / count;
    grad[p.j] -= d / count;
  }
  return {static_cast<double>(total / count), std::move(grad)};
}

namespace {

struct GradientComponent {
  std::size_t a;
  std::size_t b;
  double pred;
  double gt;
};

std::vector<GradientComponent> gradient_components(const Grid& pred, const Grid& gt,
                                                   const Mask& mask, int levels) {
  std::vector<GradientComponent> out;
  for_each_level_edge(pred.rows(), pred.cols(), mask, levels, [&](std::size_t a, std::size_t b) {
    out.push_back({a, b, pred[b] - pred[a], gt[b] - gt[a]});
  });
  return out;
}

struct NmgScale {
  double scale;
  double pred_energy;
};

NmgScale fit_nmg_scale(const std::vector<GradientComponent>& comps) {
  if (comps.empty()) {
    throw Error(ErrorKind::insufficient_data, "nmg: no valid gradient components");
  }
  long double pp = 0, pg = 0;
  for (const auto& c : comps) {
    pp += static_cast<long double>(c.pred) * c.pred;
    pg += static_cast<long double>(c.pred) * c.gt;
  }
  if (!(pp > 0)) {
    throw Error(ErrorKind::degenerate_scale, "nmg: prediction has no gradient");
  }
  return {static_cast<double>(pg / pp), static_cast<double>(pp)};
}

}  // namespace

double nmg_scale(const Grid& pred, const Grid& gt, const Mask& mask, const GradMatchConfig& cfg) {
  check_inputs(pred, gt, mask, "nmg");
  check_levels(cfg);
  return fit_nmg_scale(gradient_components(pred, gt, mask, cfg.levels)).scale;
}

LossResult nmg(const Grid& pred, const Grid& gt, const Mask& mask, const GradMatchConfig& cfg) {
  check_inputs(pred, gt, mask, "nmg");
  check_levels(cfg);
  const auto comps = gradient_components(pred, gt, mask, cfg.levels);
  const NmgScale fit = fit_nmg_scale(comps);
  const double s = fit.scale;

  double total = 0.0;
  double q = 0.0;  // d value / d s
  for (const auto& c : comps) {
    const double r = s * c.pred - c.gt;
    total += std::abs(r);
    q += sign(r) * c.pred;
  }
  Grid grad(pred.rows(), pred.cols(), 0.0);
  for (const auto& c : comps) {
    const double e = sign(s * c.pred - c.gt);
    const double ds = (c.gt - 2.0 * s * c.pred) / fit.pred_energy;
    const double h = s * e + q * ds;
    grad[c.b] += h;
    grad[c.a] -= h;
  }
  return {total, std::move(grad)};
}

}  // namespace ssidepth
