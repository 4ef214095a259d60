#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ssidepth/grid.hpp"

namespace ssidepth {

enum class Metric { whdr, abs_rel, delta_gt_125, rmse_disparity };

std::string_view to_string(Metric m) noexcept;
Metric parse_metric(std::string_view name);

// Every supported metric is lower-is-better.
constexpr bool lower_is_better(Metric) noexcept { return true; }

struct DepthCapPolicy {
  std::optional<double> cap;  // meters
};

// apply_alignment(pred, lsq_align(pred, gt, mask)); both in disparity units.
Grid eval_align(const Grid& pred_disp, const Grid& gt_disp, const Mask& mask);

// z = 1 / max(d, 1/cap), so every output depth is at most cap. Throws a
// configuration error when the policy has no cap or a nonpositive one.
Grid disparity_to_depth(const Grid& disp, const DepthCapPolicy& policy);

// (1/M) sum |z - z*| / z*. Throws domain for z* <= 0 at a valid pixel.
double abs_rel(const Grid& z, const Grid& z_star, const Mask& mask);

// Percentage of valid pixels with max(z/z*, z*/z) > threshold (strict).
double delta_gt(const Grid& z, const Grid& z_star, const Mask& mask, double threshold = 1.25);

double rmse_disparity(const Grid& pred_disp, const Grid& gt_disp, const Mask& mask);

enum class Relation { first_closer, second_closer };

struct OrdinalAnnotation {
  std::string image_id;
  std::size_t x1 = 0, y1 = 0, x2 = 0, y2 = 0;  // x = column, y = row
  Relation label = Relation::first_closer;
  double weight = 1.0;
};

// Weighted percentage of annotations the prediction orders differently; the
// first point is predicted closer iff its disparity is strictly larger, so
// exact ties always disagree.
double whdr(const Grid& pred_disp, std::span<const OrdinalAnnotation> annotations);

// CSV with header image_id,x1,y1,x2,y2,label,weight where label is one of
// first_closer / second_closer (or 1 / -1). Empty weight means 1.
std::vector<OrdinalAnnotation> parse_annotations_csv(std::istream& in);
std::vector<OrdinalAnnotation> load_annotations_csv(const std::filesystem::path& path);

enum class ResizeMode { larger_axis, smaller_axis };

struct Dims {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool operator==(const Dims&) const = default;
};

// The axis picked by `mode` becomes `target`; the other axis is the
// aspect-preserving length rounded to the nearest multiple of `multiple`
// (halfway cases round up), never below `multiple`.
Dims eval_resize_dims(std::size_t rows, std::size_t cols, std::size_t target = 384,
                      std::size_t multiple = 32, ResizeMode mode = ResizeMode::larger_axis);

// 100 * (baseline - value) / baseline for lower-is-better metrics.
double relative_change(double baseline, double value, Metric metric = Metric::abs_rel);

struct MetricRecord {
  std::string image_id;
  Metric metric = Metric::abs_rel;
  double value = 0.0;
  std::optional<std::string> skip_reason;
};

struct SkippedImage {
  std::string image_id;
  std::string reason;
};

struct AggregateReport {
  Metric metric = Metric::abs_rel;
  std::optional<double> mean;  // absent when every image was skipped
  std::size_t evaluated = 0;
  std::vector<SkippedImage> skipped;
};

// Unweighted mean over non-skipped records, folded in image-id order. Throws
// a configuration error when records mix metrics.
AggregateReport aggregate(std::span<const MetricRecord> records);

enum class GtUnit { depth, disparity };

struct DatasetDescriptor {
  std::string name;
  Metric metric = Metric::abs_rel;
  DepthCapPolicy cap;
  GtUnit gt_unit = GtUnit::depth;
  // Pixels with ground-truth depth above this are dropped before any metric.
  std::optional<double> max_gt_depth;
};

// {"name", "metric", "cap_meters", "gt_unit", optional "max_gt_depth"}; an
// optional "schema" must equal 1.
DatasetDescriptor parse_dataset_descriptor(const nlohmann::json& doc);
DatasetDescriptor load_dataset_descriptor(const std::filesystem::path& path);
nlohmann::json to_json(const DatasetDescriptor& d);

// Descriptors for the six zero-shot test sets: DIW (WHDR), ETH3D (AbsRel,
// cap 72), Sintel (AbsRel, cap 72, gt depth < 72), KITTI (delta, cap 80), NYU
// and TUM (delta, cap 10).
std::vector<DatasetDescriptor> standard_descriptors();

// Valid set for metric computation: mask pixels with finite ground truth, gt
// depth > 0 (or disparity > 0 for depth metrics), and gt depth <= max_gt_depth.
Mask evaluation_mask(const Grid& gt, const Mask& mask, const DatasetDescriptor& d);

// One image through the protocol: restrict the mask, convert gt to disparity,
// align the prediction by least squares, cap and invert for depth metrics.
// Numerical failures yield a record carrying a skip reason instead of a value.
MetricRecord evaluate_image(const std::string& image_id, const Grid& pred_disp, const Grid& gt,
                            const Mask& mask, const DatasetDescriptor& d);

// WHDR record for one image; the annotations must belong to it.
MetricRecord evaluate_ordinal_image(const std::string& image_id, const Grid& pred_disp,
                                    std::span<const OrdinalAnnotation> annotations);

// image_id,metric,value,skip_reason rows sorted by image id.
void write_records_csv(std::ostream& out, std::span<const MetricRecord> records);
nlohmann::json to_json(const AggregateReport& report, const DatasetDescriptor& d);

}  // namespace ssidepth
