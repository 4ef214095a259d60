#include "ssidepth/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ssidepth/align.hpp"
#include "ssidepth/error.hpp"
#include "ssidepth/format.hpp"

namespace ssidepth {

namespace {

void require_positive_values(const Grid& g, const Mask& mask, std::string_view what) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (mask[i] && !(g[i] > 0.0)) {
      throw Error(ErrorKind::domain, std::string(what) + ": nonpositive value at pixel " +
                                         std::to_string(i));
    }
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::size_t parse_index(const std::string& s, std::size_t line) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty() || v < 0) {
    throw Error(ErrorKind::parse, "annotations line " + std::to_string(line) +
                                      ": bad coordinate '" + s + "'");
  }
  return static_cast<std::size_t>(v);
}

double parse_real(const std::string& s, std::size_t line) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) {
    throw Error(ErrorKind::parse, "annotations line " + std::to_string(line) + ": bad number '" +
                                      s + "'");
  }
  return v;
}

std::string skip_reason(const Error& e) {
  return std::string(to_string(e.kind())) + ": " + e.what();
}

}  // namespace

std::string_view to_string(Metric m) noexcept {
  switch (m) {
    case Metric::whdr: return "whdr";
    case Metric::abs_rel: return "abs_rel";
    case Metric::delta_gt_125: return "delta_gt_125";
    case Metric::rmse_disparity: return "rmse_disparity";
  }
  return "unknown";
}

Metric parse_metric(std::string_view name) {
  for (Metric m : {Metric::whdr, Metric::abs_rel, Metric::delta_gt_125, Metric::rmse_disparity}) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorKind::configuration, "unknown metric '" + std::string(name) + "'");
}

Grid eval_align(const Grid& pred_disp, const Grid& gt_disp, const Mask& mask) {
  return apply_alignment(pred_disp, lsq_align(pred_disp, gt_disp, mask));
}

Grid disparity_to_depth(const Grid& disp, const DepthCapPolicy& policy) {
  if (!policy.cap || !(*policy.cap > 0.0) || !std::isfinite(*policy.cap)) {
    throw Error(ErrorKind::configuration, "depth conversion needs a positive cap");
  }
  const double floor = 1.0 / *policy.cap;
  Grid z(disp.rows(), disp.cols(), 0.0, Unit::depth);
  for (std::size_t i = 0; i < disp.size(); ++i) z[i] = 1.0 / std::max(disp[i], floor);
  return z;
}

double abs_rel(const Grid& z, const Grid& z_star, const Mask& mask) {
  require_same_shape(z, z_star, "abs_rel");
  require_same_shape(z, mask, "abs_rel");
  require_positive_values(z_star, mask, "abs_rel ground truth");
  const std::size_t m = mask.count();
  if (m == 0) throw Error(ErrorKind::empty_mask, "abs_rel: no valid pixels");
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (mask[i]) acc += std::abs(z[i] - z_star[i]) / z_star[i];
  }
  return acc / static_cast<double>(m);
}

double delta_gt(const Grid& z, const Grid& z_star, const Mask& mask, double threshold) {
  require_same_shape(z, z_star, "delta_gt");
  require_same_shape(z, mask, "delta_gt");
  require_positive_values(z, mask, "delta_gt prediction");
  require_positive_values(z_star, mask, "delta_gt ground truth");
  const std::size_t m = mask.count();
  if (m == 0) throw Error(ErrorKind::empty_mask, "delta_gt: no valid pixels");
  std::size_t above = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (mask[i] && std::max(z[i] / z_star[i], z_star[i] / z[i]) > threshold) ++above;
  }
  return 100.0 * static_cast<double>(above) / static_cast<double>(m);
}

double rmse_disparity(const Grid& pred_disp, const Grid& gt_disp, const Mask& mask) {
  require_same_shape(pred_disp, gt_disp, "rmse_disparity");
  require_same_shape(pred_disp, mask, "rmse_disparity");
  const std::size_t m = mask.count();
  if (m == 0) throw Error(ErrorKind::empty_mask, "rmse_disparity: no valid pixels");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred_disp.size(); ++i) {
    if (!mask[i]) continue;
    const double e = pred_disp[i] - gt_disp[i];
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(m));
}

double whdr(const Grid& pred_disp, std::span<const OrdinalAnnotation> annotations) {
  if (annotations.empty()) throw Error(ErrorKind::insufficient_data, "whdr: no annotations");
  double total = 0.0;
  double wrong = 0.0;
  for (const auto& a : annotations) {
    if (a.x1 >= pred_disp.cols() || a.x2 >= pred_disp.cols() || a.y1 >= pred_disp.rows() ||
        a.y2 >= pred_disp.rows()) {
      throw Error(ErrorKind::dimension, "whdr: annotation outside the " +
                                            std::to_string(pred_disp.rows()) + "x" +
                                            std::to_string(pred_disp.cols()) + " prediction");
    }
    if (!(a.weight > 0.0)) throw Error(ErrorKind::domain, "whdr: annotation weight must be > 0");
    const double d1 = pred_disp(a.y1, a.x1);
    const double d2 = pred_disp(a.y2, a.x2);
    // Exact ties agree with neither label.
    const bool agree = a.label == Relation::first_closer ? d1 > d2 : d2 > d1;
    total += a.weight;
    if (!agree) wrong += a.weight;
  }
  return 100.0 * wrong / total;
}

std::vector<OrdinalAnnotation> parse_annotations_csv(std::istream& in) {
  std::vector<OrdinalAnnotation> out;
  std::string line;
  std::size_t lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (header) {
      header = false;
      if (!f.empty() && f[0] == "image_id") continue;
    }
    if (f.size() != 6 && f.size() != 7) {
      throw Error(ErrorKind::parse, "annotations line " + std::to_string(lineno) +
                                        ": expected 6 or 7 fields, got " +
                                        std::to_string(f.size()));
    }
    OrdinalAnnotation a;
    a.image_id = f[0];
    a.x1 = parse_index(f[1], lineno);
    a.y1 = parse_index(f[2], lineno);
    a.x2 = parse_index(f[3], lineno);
    a.y2 = parse_index(f[4], lineno);
    if (f[5] == "first_closer" || f[5] == "1" || f[5] == "+1") {
      a.label = Relation::first_closer;
    } else if (f[5] == "second_closer" || f[5] == "-1") {
      a.label = Relation::second_closer;
    } else {
      throw Error(ErrorKind::parse, "annotations line " + std::to_string(lineno) +
                                        ": unknown label '" + f[5] + "'");
    }
    if (f.size() == 7 && !f[6].empty()) a.weight = parse_real(f[6], lineno);
    if (a.x1 == a.x2 && a.y1 == a.y2) {
      throw Error(ErrorKind::parse,
                  "annotations line " + std::to_string(lineno) + ": identical points");
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<OrdinalAnnotation> load_annotations_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  return parse_annotations_csv(in);
}

Dims eval_resize_dims(std::size_t rows, std::size_t cols, std::size_t target,
                      std::size_t multiple, ResizeMode mode) {
  if (rows == 0 || cols == 0) throw Error(ErrorKind::dimension, "resize: empty image");
  if (target == 0 || multiple == 0) {
    throw Error(ErrorKind::configuration, "resize: target and multiple must be positive");
  }
  const bool rows_larger = rows >= cols;
  const bool pick_rows = mode == ResizeMode::larger_axis ? rows_larger : !rows_larger;
  const double picked = static_cast<double>(pick_rows ? rows : cols);
  const double other = static_cast<double>(pick_rows ? cols : rows);
  const double scaled = other * static_cast<double>(target) / picked;
  const auto k = std::llround(scaled / static_cast<double>(multiple));
  const std::size_t snapped = std::max<std::size_t>(1, static_cast<std::size_t>(k)) * multiple;
  return pick_rows ? Dims{target, snapped} : Dims{snapped, target};
}

double relative_change(double baseline, double value, Metric metric) {
  if (baseline == 0.0) throw Error(ErrorKind::domain, "relative_change: zero baseline");
  const double sign = lower_is_better(metric) ? 1.0 : -1.0;
  return sign * 100.0 * (baseline - value) / baseline;
}

AggregateReport aggregate(std::span<const MetricRecord> records) {
  std::vector<const MetricRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const MetricRecord* a, const MetricRecord* b) {
                     return a->image_id < b->image_id;
                   });
  AggregateReport report;
  if (!sorted.empty()) report.metric = sorted.front()->metric;
  double acc = 0.0;
  for (const MetricRecord* r : sorted) {
    if (r->metric != report.metric) {
      throw Error(ErrorKind::configuration, "aggregate: records mix metrics");
    }
    if (r->skip_reason) {
      report.skipped.push_back({r->image_id, *r->skip_reason});
      continue;
    }
    acc += r->value;
    ++report.evaluated;
  }
  if (report.evaluated > 0) report.mean = acc / static_cast<double>(report.evaluated);
  return report;
}

DatasetDescriptor parse_dataset_descriptor(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::parse, "dataset descriptor must be an object");
  if (doc.contains("schema") && doc.at("schema") != 1) {
    throw Error(ErrorKind::configuration, "unsupported descriptor schema");
  }
  DatasetDescriptor d;
  try {
    d.name = doc.at("name").get<std::string>();
    d.metric = parse_metric(doc.at("metric").get<std::string>());
    if (doc.contains("cap_meters") && !doc.at("cap_meters").is_null()) {
      d.cap.cap = doc.at("cap_meters").get<double>();
    }
    const std::string unit = doc.value("gt_unit", std::string("depth"));
    if (unit == "depth") {
      d.gt_unit = GtUnit::depth;
    } else if (unit == "disparity") {
      d.gt_unit = GtUnit::disparity;
    } else {
      throw Error(ErrorKind::configuration, "gt_unit must be depth or disparity, got '" + unit + "'");
    }
    if (doc.contains("max_gt_depth") && !doc.at("max_gt_depth").is_null()) {
      d.max_gt_depth = doc.at("max_gt_depth").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("dataset descriptor: ") + e.what());
  }
  if (d.cap.cap && !(*d.cap.cap > 0.0)) {
    throw Error(ErrorKind::configuration, "cap_meters must be positive");
  }
  const bool depth_metric = d.metric == Metric::abs_rel || d.metric == Metric::delta_gt_125;
  if (depth_metric && !d.cap.cap) {
    throw Error(ErrorKind::configuration,
                "descriptor '" + d.name + "': depth metrics need cap_meters");
  }
  return d;
}

DatasetDescriptor load_dataset_descriptor(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, path.string() + ": " + e.what());
  }
  return parse_dataset_descriptor(doc);
}

nlohmann::json to_json(const DatasetDescriptor& d) {
  nlohmann::json j;
  j["schema"] = 1;
  j["name"] = d.name;
  j["metric"] = std::string(to_string(d.metric));
  j["cap_meters"] = d.cap.cap ? nlohmann::json(*d.cap.cap) : nlohmann::json(nullptr);
  j["gt_unit"] = d.gt_unit == GtUnit::depth ? "depth" : "disparity";
  if (d.max_gt_depth) j["max_gt_depth"] = *d.max_gt_depth;
  return j;
}

std::vector<DatasetDescriptor> standard_descriptors() {
  return {
      {"DIW", Metric::whdr, {}, GtUnit::depth, std::nullopt},
      {"ETH3D", Metric::abs_rel, {72.0}, GtUnit::depth, std::nullopt},
      {"Sintel", Metric::abs_rel, {72.0}, GtUnit::depth, 72.0},
      {"KITTI", Metric::delta_gt_125, {80.0}, GtUnit::depth, std::nullopt},
      {"NYU", Metric::delta_gt_125, {10.0}, GtUnit::depth, std::nullopt},
      {"TUM", Metric::delta_gt_125, {10.0}, GtUnit::depth, std::nullopt},
  };
}

Mask evaluation_mask(const Grid& gt, const Mask& mask, const DatasetDescriptor& d) {
  require_same_shape(gt, mask, "evaluation_mask");
  const bool needs_positive = d.gt_unit == GtUnit::depth || d.metric != Metric::rmse_disparity;
  Mask out(gt.rows(), gt.cols(), false);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!mask[i] || !std::isfinite(gt[i])) continue;
    if (needs_positive && !(gt[i] > 0.0)) continue;
    if (d.max_gt_depth && gt[i] > 0.0) {
      const double depth = d.gt_unit == GtUnit::depth ? gt[i] : 1.0 / gt[i];
      if (depth > *d.max_gt_depth) continue;
    }
    out.set(i, true);
  }
  return out;
}

MetricRecord evaluate_image(const std::string& image_id, const Grid& pred_disp, const Grid& gt,
                            const Mask& mask, const DatasetDescriptor& d) {
  if (d.metric == Metric::whdr) {
    throw Error(ErrorKind::configuration, "WHDR images are evaluated from ordinal annotations");
  }
  require_same_shape(pred_disp, gt, "evaluate_image");
  require_same_shape(pred_disp, mask, "evaluate_image");
  MetricRecord rec{image_id, d.metric, 0.0, std::nullopt};
  try {
    const Mask valid = evaluation_mask(gt, mask, d);
    Grid gt_disp(gt.rows(), gt.cols(), 0.0, Unit::disparity);
    Grid gt_depth(gt.rows(), gt.cols(), 0.0, Unit::depth);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (!valid[i]) continue;
      if (d.gt_unit == GtUnit::depth) {
        gt_depth[i] = gt[i];
        gt_disp[i] = 1.0 / gt[i];
      } else {
        gt_disp[i] = gt[i];
        if (gt[i] > 0.0) gt_depth[i] = 1.0 / gt[i];
      }
    }
    const Grid aligned = eval_align(pred_disp, gt_disp, valid);
    switch (d.metric) {
      case Metric::rmse_disparity: rec.value = rmse_disparity(aligned, gt_disp, valid); break;
      case Metric::abs_rel: rec.value = abs_rel(disparity_to_depth(aligned, d.cap), gt_depth, valid); break;
      case Metric::delta_gt_125:
        rec.value = delta_gt(disparity_to_depth(aligned, d.cap), gt_depth, valid);
        break;
      case Metric::whdr: break;
    }
  } catch (const Error& e) {
    if (!is_numerical(e.kind())) throw;
    rec.value = 0.0;
    rec.skip_reason = skip_reason(e);
  }
  return rec;
}

MetricRecord evaluate_ordinal_image(const std::string& image_id, const Grid& pred_disp,
                                    std::span<const OrdinalAnnotation> annotations) {
  MetricRecord rec{image_id, Metric::whdr, 0.0, std::nullopt};
  try {
    rec.value = whdr(pred_disp, annotations);
  } catch (const Error& e) {
    if (!is_numerical(e.kind())) throw;
    rec.skip_reason = skip_reason(e);
  }
  return rec;
}

void write_records_csv(std::ostream& out, std::span<const MetricRecord> records) {
  std::vector<const MetricRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const MetricRecord* a, const MetricRecord* b) {
                     return a->image_id < b->image_id;
                   });
  out << "image_id,metric,value,skip_reason\n";
  for (const MetricRecord* r : sorted) {
    out << r->image_id << ',' << to_string(r->metric) << ',';
    if (r->skip_reason) {
      std::string reason = *r->skip_reason;
      std::replace(reason.begin(), reason.end(), ',', ';');
      std::replace(reason.begin(), reason.end(), '\n', ' ');
      out << ',' << reason;
    } else {
      out << shortest(r->value) << ',';
    }
    out << '\n';
  }
}

nlohmann::json to_json(const AggregateReport& report, const DatasetDescriptor& d) {
  nlohmann::json j;
  j["schema"] = 1;
  j["dataset"] = d.name;
  j["metric"] = std::string(to_string(report.metric));
  j["lower_is_better"] = lower_is_better(report.metric);
  j["mean"] = report.mean ? nlohmann::json(*report.mean) : nlohmann::json(nullptr);
  j["evaluated"] = report.evaluated;
  j["skipped_count"] = report.skipped.size();
  nlohmann::json skipped = nlohmann::json::array();
  for (const auto& s : report.skipped) skipped.push_back({{"image_id", s.image_id}, {"reason", s.reason}});
  j["skipped"] = std::move(skipped);
  return j;
}

}  // namespace ssidepth
