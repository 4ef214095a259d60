#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssidepth/error.hpp"
#include "ssidepth/eval.hpp"
#include "ssidepth/format.hpp"
#include "ssidepth/io.hpp"
#include "ssidepth/losses.hpp"
#include "ssidepth/mo_opt.hpp"
#include "ssidepth/stereo.hpp"
#include "ssidepth/trainer.hpp"

namespace ssidepth::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void emit(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot write " + path.string());
  f << j.dump(2) << '\n';
  if (!f) throw Error(ErrorKind::io, "write failed for " + path.string());
}

json read_json_file(const fs::path& path, ErrorKind bad_syntax) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(bad_syntax, path.string() + ": " + e.what());
  }
}

fs::path resolve(const fs::path& base_dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

BaseLoss parse_base(const std::string& s) {
  if (s == "ssimse") return BaseLoss::ssimse;
  if (s == "ssimae") return BaseLoss::ssimae;
  if (s == "ssitrim") return BaseLoss::ssitrim;
  throw Error(ErrorKind::configuration, "unknown base loss '" + s + "'");
}

json grad_stats(const Grid& grad) {
  double l2 = 0.0;
  double max_abs = 0.0;
  double sum = 0.0;
  for (double g : grad.values()) {
    l2 += g * g;
    max_abs = std::max(max_abs, std::abs(g));
    sum += g;
  }
  return {{"l2", std::sqrt(l2)}, {"max_abs", max_abs}, {"sum", sum}};
}

// Checks that every key of `obj` is listed in `allowed`.
void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                  const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorKind::configuration, where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* a) { return key == a; });
    if (!known) throw Error(ErrorKind::configuration, where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::configuration, std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

void cmd_loss(const LossOptions& o, std::ostream& out) {
  static const std::set<std::string> kLosses{"ssimse", "ssimae", "ssitrim", "silog",
                                             "ordinal", "nmg", "total"};
  if (!kLosses.count(o.loss)) throw Error(ErrorKind::configuration, "unknown loss '" + o.loss + "'");
  const Unit unit = o.loss == "silog" ? Unit::depth : Unit::disparity;
  const Grid pred = read_pfm(o.pred, unit);
  const Grid gt = read_pfm(o.gt, unit);
  const Mask mask = o.mask.empty() ? Mask(gt.rows(), gt.cols(), true) : read_pgm_mask(o.mask);
  require_same_shape(pred, gt, "loss inputs");
  require_same_shape(pred, mask, "loss inputs");

  const TrimConfig trim{o.trim};
  const GradMatchConfig gm{o.levels};
  LossResult r;
  if (o.loss == "ssimse") {
    r = ssimse(pred, gt, mask);
  } else if (o.loss == "ssimae") {
    r = ssimae(pred, gt, mask);
  } else if (o.loss == "ssitrim") {
    r = ssitrim(pred, gt, mask, trim);
  } else if (o.loss == "silog") {
    r = silog(pred, gt, mask);
  } else if (o.loss == "ordinal") {
    r = ordinal(pred, gt, mask, OrdinalConfig{o.pairs, o.ratio, o.seed});
  } else if (o.loss == "nmg") {
    r = nmg(pred, gt, mask, gm);
  } else {
    r = total_loss(pred, gt, mask, TotalLossConfig{o.alpha, parse_base(o.base)}, trim, gm);
  }
  if (!o.grad_out.empty()) write_pfm(o.grad_out, r.grad);

  json j;
  j["schema"] = 1;
  j["loss"] = o.loss;
  if (o.loss == "total") j["base"] = o.base;
  j["value"] = r.value;
  j["value_12g"] = significant(r.value, 12);
  j["valid_pixels"] = mask.count();
  j["grad"] = grad_stats(r.grad);
  emit(out, j);
}

void cmd_eval(const EvalOptions& o, std::ostream& out) {
  if (o.descriptor.empty() == o.dataset.empty()) {
    throw Error(ErrorKind::configuration, "give exactly one of --descriptor and --dataset");
  }
  DatasetDescriptor desc;
  if (!o.descriptor.empty()) {
    desc = load_dataset_descriptor(o.descriptor);
  } else {
    const auto all = standard_descriptors();
    const auto it = std::find_if(all.begin(), all.end(),
                                 [&](const DatasetDescriptor& d) { return d.name == o.dataset; });
    if (it == all.end()) throw Error(ErrorKind::configuration, "unknown dataset '" + o.dataset + "'");
    desc = *it;
  }

  const fs::path manifest_path(o.manifest);
  const json manifest = read_json_file(manifest_path, ErrorKind::parse);
  const fs::path base = manifest_path.parent_path();
  if (!manifest.is_object() || !manifest.contains("images") || !manifest.at("images").is_array()) {
    throw Error(ErrorKind::parse, "eval manifest needs an \"images\" array");
  }
  if (manifest.contains("schema") && manifest.at("schema") != 1) {
    throw Error(ErrorKind::configuration, "unsupported manifest schema");
  }

  struct Item {
    std::string id;
    Grid pred;
    Grid gt;
    Mask mask;
  };
  std::vector<Item> items;
  std::map<std::string, std::vector<OrdinalAnnotation>> by_image;
  const bool ordinal = desc.metric == Metric::whdr;
  if (ordinal) {
    if (!manifest.contains("annotations")) {
      throw Error(ErrorKind::configuration, "WHDR evaluation needs an \"annotations\" CSV");
    }
    for (auto& a : load_annotations_csv(resolve(base, manifest.at("annotations").get<std::string>()))) {
      by_image[a.image_id].push_back(std::move(a));
    }
  }

  // Everything is read and checked before any metric is computed.
  std::set<std::string> seen;
  for (const auto& entry : manifest.at("images")) {
    std::string id;
    try {
      id = entry.at("id").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::parse, std::string("manifest image entry: ") + e.what());
    }
    if (!seen.insert(id).second) throw Error(ErrorKind::parse, "duplicate image id '" + id + "'");
    Grid pred = read_pfm(fs::path(o.pred_dir) / (id + ".pfm"), Unit::disparity);
    if (ordinal) {
      if (!by_image.count(id)) {
        throw Error(ErrorKind::configuration, "image '" + id + "' has no annotations");
      }
      items.push_back({id, std::move(pred), Grid(), Mask()});
      continue;
    }
    if (!entry.contains("gt")) {
      throw Error(ErrorKind::configuration, "image '" + id + "' has no \"gt\" for metric " +
                                                std::string(to_string(desc.metric)));
    }
    const Unit unit = desc.gt_unit == GtUnit::depth ? Unit::depth : Unit::disparity;
    Grid gt = read_pfm(resolve(base, entry.at("gt").get<std::string>()), unit);
    Mask mask = entry.contains("mask")
                    ? read_pgm_mask(resolve(base, entry.at("mask").get<std::string>()))
                    : Mask(gt.rows(), gt.cols(), true);
    require_same_shape(pred, gt, "image '" + id + "'");
    require_same_shape(gt, mask, "image '" + id + "'");
    items.push_back({id, std::move(pred), std::move(gt), std::move(mask)});
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.id < b.id; });

  std::vector<MetricRecord> records;
  for (const Item& it : items) {
    records.push_back(ordinal ? evaluate_ordinal_image(it.id, it.pred, by_image.at(it.id))
                              : evaluate_image(it.id, it.pred, it.gt, it.mask, desc));
  }

  if (!o.csv_out.empty()) {
    std::ofstream csv(o.csv_out, std::ios::binary);
    if (!csv) throw Error(ErrorKind::io, "cannot write " + o.csv_out);
    write_records_csv(csv, records);
  }
  json report = to_json(aggregate(records), desc);
  report["descriptor"] = to_json(desc);
  if (!o.report_out.empty()) write_json_file(o.report_out, report);
  emit(out, report);
}

void cmd_filter_frames(const FilterOptions& o, std::ostream& out) {
  const fs::path manifest_path(o.manifest);
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + manifest_path.string());
  const fs::path base = manifest_path.parent_path();

  struct Frame {
    std::string id;
    std::vector<std::string> paths;
    FlowField lr;
    FlowField rl;
  };
  std::vector<Frame> frames;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto f = split_csv(line);
    if (lineno == 1 && !f.empty() && f[0] == "frame_id") continue;
    if (f.size() != 5) {
      throw Error(ErrorKind::parse, "flow manifest line " + std::to_string(lineno) +
                                        ": expected frame_id,u_lr,v_lr,u_rl,v_rl");
    }
    if (!seen.insert(f[0]).second) throw Error(ErrorKind::parse, "duplicate frame '" + f[0] + "'");
    Frame fr{f[0], {f[1], f[2], f[3], f[4]}, {}, {}};
    fr.lr = {read_pfm(resolve(base, f[1]), Unit::flow_u), read_pfm(resolve(base, f[2]), Unit::flow_v)};
    fr.rl = {read_pfm(resolve(base, f[3]), Unit::flow_u), read_pfm(resolve(base, f[4]), Unit::flow_v)};
    require_same_shape(fr.lr.u, fr.lr.v, "frame '" + fr.id + "'");
    require_same_shape(fr.lr.u, fr.rl.u, "frame '" + fr.id + "'");
    require_same_shape(fr.rl.u, fr.rl.v, "frame '" + fr.id + "'");
    frames.push_back(std::move(fr));
  }
  std::sort(frames.begin(), frames.end(), [](const Frame& a, const Frame& b) { return a.id < b.id; });

  const QualityThresholds th{o.vertical_px, o.vertical_fraction, o.horizontal_range, o.pass_rate,
                             o.lr_threshold};
  json summary;
  summary["schema"] = 1;
  summary["thresholds"] = {{"vertical_px", th.vertical_px},
                           {"vertical_fraction", th.vertical_fraction},
                           {"min_horizontal_range", th.min_horizontal_range},
                           {"min_pass_rate", th.min_pass_rate},
                           {"lr_threshold", th.lr_threshold}};
  json reports = json::array();
  std::ostringstream accepted;
  accepted << "frame_id,u_lr,v_lr,u_rl,v_rl\n";
  std::size_t n_accepted = 0;
  if (!o.out_dir.empty()) fs::create_directories(o.out_dir);
  for (const Frame& fr : frames) {
    json r = to_json(frame_quality(fr.lr, fr.rl, th));
    r["frame_id"] = fr.id;
    if (r.at("accepted").get<bool>()) {
      ++n_accepted;
      accepted << fr.id;
      for (const auto& p : fr.paths) accepted << ',' << p;
      accepted << '\n';
    }
    if (!o.out_dir.empty()) write_json_file(fs::path(o.out_dir) / (fr.id + ".json"), r);
    reports.push_back(std::move(r));
  }
  if (!o.out_dir.empty()) {
    std::ofstream f(fs::path(o.out_dir) / "accepted.csv", std::ios::binary);
    if (!f) throw Error(ErrorKind::io, "cannot write accepted.csv in " + o.out_dir);
    f << accepted.str();
  }
  summary["frames"] = frames.size();
  summary["accepted"] = n_accepted;
  summary["reports"] = std::move(reports);
  emit(out, summary);
}

void cmd_train_toy(const TrainOptions& o, std::ostream& out) {
  const json cfg = read_json_file(o.config, ErrorKind::configuration);
  require_keys(cfg,
               {"schema", "experiment", "seed", "predictor", "rows", "cols", "samples",
                "affine_corruption", "true_weights", "datasets", "batch_size", "loss",
                "optimizer", "robustness"},
               "train config");
  if (get_or<int>(cfg, "schema", 0) != 1) {
    throw Error(ErrorKind::configuration, "train config needs \"schema\": 1");
  }
  const std::string experiment = get_or<std::string>(cfg, "experiment", "naive");
  const std::uint64_t seed = o.seed.value_or(get_or<std::uint64_t>(cfg, "seed", 0));

  const json loss_j = cfg.value("loss", json::object());
  require_keys(loss_j, {"base", "alpha", "trim_fraction", "levels"}, "loss");
  LossSpec loss;
  loss.total.base = parse_base(get_or<std::string>(loss_j, "base", "ssitrim"));
  loss.total.alpha = o.alpha.value_or(get_or<double>(loss_j, "alpha", 0.5));
  loss.trim.trim_fraction = o.trim.value_or(get_or<double>(loss_j, "trim_fraction", 0.2));
  loss.gm.levels = o.levels.value_or(get_or<int>(loss_j, "levels", 4));
  if (!(loss.total.alpha >= 0.0)) throw Error(ErrorKind::configuration, "alpha must be >= 0");
  if (!(loss.trim.trim_fraction >= 0.0 && loss.trim.trim_fraction < 1.0)) {
    throw Error(ErrorKind::configuration, "trim_fraction must lie in [0, 1)");
  }
  if (loss.gm.levels < 1) throw Error(ErrorKind::configuration, "levels must be >= 1");

  const bool robustness = experiment == "robustness";
  OptimizerConfig opt = robustness ? RobustnessConfig{}.opt : OptimizerConfig{};
  if (cfg.contains("optimizer")) {
    const json& oj = cfg.at("optimizer");
    require_keys(oj, {"algorithm", "lr", "beta1", "beta2", "epsilon", "steps", "cosine_decay"},
                 "optimizer");
    const std::string alg = get_or<std::string>(oj, "algorithm", "adam");
    if (alg == "adam") {
      opt.algorithm = OptimizerKind::adam;
    } else if (alg == "sgd") {
      opt.algorithm = OptimizerKind::sgd;
    } else {
      throw Error(ErrorKind::configuration, "unknown optimizer '" + alg + "'");
    }
    opt.lr = get_or<double>(oj, "lr", opt.lr);
    opt.beta1 = get_or<double>(oj, "beta1", opt.beta1);
    opt.beta2 = get_or<double>(oj, "beta2", opt.beta2);
    opt.epsilon = get_or<double>(oj, "epsilon", opt.epsilon);
    opt.steps = get_or<std::size_t>(oj, "steps", opt.steps);
    opt.cosine_decay = get_or<bool>(oj, "cosine_decay", opt.cosine_decay);
  }
  if (o.lr) opt.lr = *o.lr;
  if (o.beta1) opt.beta1 = *o.beta1;
  if (o.beta2) opt.beta2 = *o.beta2;
  if (o.steps) opt.steps = *o.steps;
  validate(opt);

  json report;
  report["schema"] = 1;
  report["experiment"] = experiment;
  report["seed"] = seed;

  if (robustness) {
    RobustnessConfig rc;
    const json rj = cfg.value("robustness", json::object());
    require_keys(rj, {"grid_size", "outlier_fraction", "outlier_magnitude"}, "robustness");
    rc.grid_size = get_or<std::size_t>(rj, "grid_size", rc.grid_size);
    rc.outlier_fraction = get_or<double>(rj, "outlier_fraction", rc.outlier_fraction);
    rc.outlier_magnitude = get_or<double>(rj, "outlier_magnitude", rc.outlier_magnitude);
    rc.seed = seed;
    rc.alpha = loss.total.alpha;
    rc.trim = loss.trim;
    rc.gm = loss.gm;
    rc.opt = opt;
    const RobustnessReport r = robustness_experiment(rc);
    report["outliers"] = r.outliers;
    report["inlier_rmse"] = {{"ssitrim", r.inlier_rmse_ssitrim},
                             {"ssimse", r.inlier_rmse_ssimse},
                             {"ssimae", r.inlier_rmse_ssimae}};
    if (!o.report_out.empty()) write_json_file(o.report_out, report);
    emit(out, report);
    return;
  }
  if (experiment != "naive" && experiment != "pareto") {
    throw Error(ErrorKind::configuration,
                "experiment must be naive, pareto or robustness, got '" + experiment + "'");
  }

  SyntheticConfig sc;
  sc.rows = get_or<std::size_t>(cfg, "rows", sc.rows);
  sc.cols = get_or<std::size_t>(cfg, "cols", sc.cols);
  sc.samples = get_or<std::size_t>(cfg, "samples", sc.samples);
  sc.affine_corruption = get_or<bool>(cfg, "affine_corruption", sc.affine_corruption);
  if (sc.rows < 2 || sc.cols < 2 || sc.samples < 1) {
    throw Error(ErrorKind::configuration, "rows, cols >= 2 and samples >= 1 required");
  }
  const std::string pred_kind = get_or<std::string>(cfg, "predictor", "linear_features");
  const auto weights = get_or<std::vector<double>>(cfg, "true_weights", {1.0, -0.5, 0.8});
  if (!cfg.contains("datasets") || !cfg.at("datasets").is_array() || cfg.at("datasets").empty()) {
    throw Error(ErrorKind::configuration, "train config needs a nonempty \"datasets\" array");
  }
  std::vector<SyntheticDataset> data;
  for (const auto& dj : cfg.at("datasets")) {
    require_keys(dj, {"id", "seed"}, "dataset entry");
    const auto id = get_or<std::string>(dj, "id", "");
    if (id.empty()) throw Error(ErrorKind::configuration, "dataset entry needs an id");
    const auto dseed = get_or<std::uint64_t>(dj, "seed", data.size() + 1);
    if (pred_kind == "linear_features") {
      data.push_back(make_linear_dataset(id, sc, weights, dseed));
    } else if (pred_kind == "free_grid") {
      data.push_back(make_field_dataset(id, sc, dseed));
    } else {
      throw Error(ErrorKind::configuration, "unknown predictor '" + pred_kind + "'");
    }
  }
  const std::size_t batch = get_or<std::size_t>(cfg, "batch_size", 2 * data.size());
  const MixPlan plan = plan_for(data, batch);
  const PredictorKind kind =
      pred_kind == "free_grid" ? PredictorKind::free_grid : PredictorKind::linear_features;
  const std::size_t nfeat = kind == PredictorKind::linear_features ? weights.size() : 0;

  const TrainResult res = experiment == "pareto"
                              ? train_pareto(data, loss, opt, plan, seed, kind, nfeat)
                              : train_naive(data, loss, opt, plan, seed, kind, nfeat);
  if (!o.trace_out.empty()) {
    std::ofstream f(o.trace_out, std::ios::binary);
    if (!f) throw Error(ErrorKind::io, "cannot write " + o.trace_out);
    write_trace_csv(f, res.trace);
  }

  const auto losses = dataset_losses(data, res.predictor, loss);
  const auto grads = dataset_gradients(data, res.predictor, loss);
  const SimplexWeights w = min_norm_fw(grads);
  json final_losses = json::array();
  for (std::size_t l = 0; l < data.size(); ++l) {
    final_losses.push_back({{"dataset_id", data[l].id}, {"loss", losses[l]}});
  }
  report["steps"] = opt.steps;
  report["final_losses"] = std::move(final_losses);
  report["min_norm_sq"] = squared_norm(combine(grads, w));
  report["min_norm_weights"] = w.alpha;
  if (kind == PredictorKind::linear_features) {
    report["theta"] = std::vector<double>(res.predictor.theta().begin(), res.predictor.theta().end());
  }
  report["theta_size"] = res.predictor.theta().size();
  if (!o.report_out.empty()) write_json_file(o.report_out, report);
  emit(out, report);
}

void cmd_mgda(const MgdaOptions& o, std::ostream& out) {
  std::ifstream in(o.grads);
  if (!in) throw Error(ErrorKind::io, "cannot open " + o.grads);
  std::vector<TaskGradient> grads;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv(line);
    if (lineno == 1 && f[0] == "dataset_id") continue;
    if (f.size() < 2) {
      throw Error(ErrorKind::parse, "gradient line " + std::to_string(lineno) +
                                        ": expected dataset_id followed by components");
    }
    TaskGradient t{f[0], {}};
    for (std::size_t k = 1; k < f.size(); ++k) {
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(f[k], &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos == 0 || pos != f[k].size()) {
        throw Error(ErrorKind::parse, "gradient line " + std::to_string(lineno) +
                                          ": bad number '" + f[k] + "'");
      }
      t.g.push_back(v);
    }
    grads.push_back(std::move(t));
  }
  if (o.max_iter < 1 || !(o.tol > 0.0)) {
    throw Error(ErrorKind::configuration, "max-iter must be >= 1 and tol > 0");
  }
  const SimplexWeights w = min_norm_fw(grads, FrankWolfeOptions{o.max_iter, o.tol});
  json weights = json::array();
  for (std::size_t l = 0; l < grads.size(); ++l) {
    weights.push_back({{"dataset_id", grads[l].dataset_id}, {"alpha", w.alpha[l]}});
  }
  json j;
  j["schema"] = 1;
  j["weights"] = std::move(weights);
  j["min_norm_sq"] = squared_norm(combine(grads, w));
  emit(out, j);
}

}  // namespace ssidepth::cli
