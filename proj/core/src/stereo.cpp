#include "ssidepth/stereo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "ssidepth/error.hpp"

namespace ssidepth {

namespace {

void check_flow(const FlowField& f, std::string_view what) {
  require_same_shape(f.u, f.v, what);
}

}  // namespace

Mask lr_consistency(const FlowField& flow_lr, const FlowField& flow_rl, double threshold) {
  check_flow(flow_lr, "lr_consistency");
  check_flow(flow_rl, "lr_consistency");
  require_same_shape(flow_lr.u, flow_rl.u, "lr_consistency");
  const std::size_t rows = flow_lr.u.rows();
  const std::size_t cols = flow_lr.u.cols();
  const double last = static_cast<double>(cols - 1);
  Mask out(rows, cols, false);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double u = flow_lr.u(r, c);
      const double x = static_cast<double>(c) + u;
      if (!std::isfinite(x) || x < 0.0 || x > last) continue;
      const auto x0 = static_cast<std::size_t>(std::floor(x));
      const double f = x - static_cast<double>(x0);
      double back = flow_rl.u(r, x0);
      if (f > 0.0) back = (1.0 - f) * back + f * flow_rl.u(r, x0 + 1);
      if (std::abs(u + back) <= threshold) out.set(r, c, true);
    }
  }
  return out;
}

std::string_view to_string(RejectReason r) noexcept {
  switch (r) {
    case RejectReason::vertical_disparity: return "vertical_disparity";
    case RejectReason::horizontal_range: return "horizontal_range";
    case RejectReason::lr_pass_rate: return "lr_pass_rate";
  }
  return "unknown";
}

FrameQualityReport frame_quality(const FlowField& flow_lr, const FlowField& flow_rl,
                                 const QualityThresholds& th) {
  const Mask consistent = lr_consistency(flow_lr, flow_rl, th.lr_threshold);
  const std::size_t pixels = flow_lr.u.size();

  std::size_t vertical = 0;
  for (double v : flow_lr.v.values()) {
    if (!(std::abs(v) <= th.vertical_px)) ++vertical;
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pixels; ++i) {
    if (!consistent[i]) continue;
    lo = std::min(lo, flow_lr.u[i]);
    hi = std::max(hi, flow_lr.u[i]);
  }
  const std::size_t passed = consistent.count();

  FrameQualityReport rep;
  rep.vertical_violation_fraction = static_cast<double>(vertical) / static_cast<double>(pixels);
  rep.horizontal_range = passed > 0 ? hi - lo : 0.0;
  rep.lr_pass_rate = static_cast<double>(passed) / static_cast<double>(pixels);
  if (rep.vertical_violation_fraction > th.vertical_fraction) {
    rep.reject_reasons.push_back(RejectReason::vertical_disparity);
  }
  if (rep.horizontal_range < th.min_horizontal_range) {
    rep.reject_reasons.push_back(RejectReason::horizontal_range);
  }
  if (rep.lr_pass_rate < th.min_pass_rate) rep.reject_reasons.push_back(RejectReason::lr_pass_rate);
  rep.accepted = rep.reject_reasons.empty();
  return rep;
}

nlohmann::json to_json(const FrameQualityReport& report) {
  nlohmann::json reasons = nlohmann::json::array();
  for (RejectReason r : report.reject_reasons) reasons.push_back(std::string(to_string(r)));
  return {{"vertical_violation_fraction", report.vertical_violation_fraction},
          {"horizontal_range", report.horizontal_range},
          {"lr_pass_rate", report.lr_pass_rate},
          {"accepted", report.accepted},
          {"reject_reasons", std::move(reasons)}};
}

MaskedDisparity apply_sky_mask(const Grid& disp, const Mask& mask, const Mask& sky) {
  require_same_shape(disp, mask, "apply_sky_mask");
  require_same_shape(disp, sky, "apply_sky_mask");
  double lo = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < disp.size(); ++i) {
    if (mask[i] && !sky[i]) {
      lo = std::min(lo, disp[i]);
      any = true;
    }
  }
  bool has_sky = false;
  for (std::size_t i = 0; i < disp.size() && !has_sky; ++i) has_sky = sky[i];
  MaskedDisparity out{disp, mask};
  if (!has_sky) return out;
  if (!any) throw Error(ErrorKind::empty_mask, "apply_sky_mask: no valid non-sky pixels");
  for (std::size_t i = 0; i < disp.size(); ++i) {
    if (!sky[i]) continue;
    out.disp[i] = lo;
    out.mask.set(i, true);
  }
  return out;
}

Grid normalize_unit(const Grid& disp, const Mask& mask) {
  const double lo = masked_reduce(disp, mask, Reduction::min);
  const double hi = masked_reduce(disp, mask, Reduction::max);
  if (!(hi > lo)) throw Error(ErrorKind::degenerate_range, "normalize_unit: constant disparity");
  const double range = hi - lo;
  Grid out(disp.rows(), disp.cols(), 0.0, disp.unit());
  for (std::size_t i = 0; i < disp.size(); ++i) out[i] = (disp[i] - lo) / range;
  return out;
}

}  // namespace ssidepth
