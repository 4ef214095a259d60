#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ssidepth/grid.hpp"

namespace ssidepth {

// Dense optical flow between the two views of a stereo frame, in pixels.
struct FlowField {
  Grid u;
  Grid v;
};

// Pixel x is kept iff the right-to-left flow, sampled bilinearly along the row
// at x + u_lr(x), cancels u_lr(x) to within `threshold` pixels. Warp targets
// outside [0, cols - 1] and non-finite flow are invalid.
Mask lr_consistency(const FlowField& flow_lr, const FlowField& flow_rl, double threshold = 2.0);

struct QualityThresholds {
  double vertical_px = 2.0;
  double vertical_fraction = 0.10;
  double min_horizontal_range = 10.0;
  double min_pass_rate = 0.70;
  double lr_threshold = 2.0;
};

enum class RejectReason { vertical_disparity, horizontal_range, lr_pass_rate };

std::string_view to_string(RejectReason r) noexcept;

struct FrameQualityReport {
  double vertical_violation_fraction = 0.0;
  double horizontal_range = 0.0;
  double lr_pass_rate = 0.0;
  bool accepted = false;
  std::vector<RejectReason> reject_reasons;  // every rule that fired, in rule order
};

// Vertical violations are counted on |v_lr| over all pixels; the horizontal
// range is max - min of u_lr over the left-right consistent pixels (0 when
// there are none).
FrameQualityReport frame_quality(const FlowField& flow_lr, const FlowField& flow_rl,
                                 const QualityThresholds& th = {});

nlohmann::json to_json(const FrameQualityReport& report);

struct MaskedDisparity {
  Grid disp;
  Mask mask;
};

// Sky pixels take the minimum disparity over the valid non-sky pixels and
// become valid.
MaskedDisparity apply_sky_mask(const Grid& disp, const Mask& mask, const Mask& sky);

// (d - min) / (max - min) with min and max over valid pixels, so valid values
// span exactly [0, 1]. Throws degenerate_range for constant input.
Grid normalize_unit(const Grid& disp, const Mask& mask);

}  // namespace ssidepth
