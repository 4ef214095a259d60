#include "ssidepth/trainer.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "ssidepth/align.hpp"
#include "ssidepth/error.hpp"
#include "ssidepth/format.hpp"

namespace ssidepth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct AffineMap {
  double scale = 1.0;
  double shift = 0.0;
};

AffineMap draw_affine(Rng& rng, bool enabled) {
  if (!enabled) return {};
  const double s = rng.uniform(0.5, 2.0);
  const double t = rng.uniform(-0.5, 0.5);
  return {s, t};
}

void apply(Grid& g, const AffineMap& a) {
  for (double& v : g.values()) v = a.scale * v + a.shift;
}

void check_shapes(std::span<const SyntheticDataset> data) {
  if (data.empty()) throw Error(ErrorKind::configuration, "no datasets");
  const Sample* first = nullptr;
  for (const auto& d : data) {
    if (d.samples.empty()) throw Error(ErrorKind::configuration, "dataset '" + d.id + "' is empty");
    for (const auto& s : d.samples) {
      require_same_shape(s.gt, s.mask, "sample");
      if (first == nullptr) first = &s;
      if (!s.gt.same_shape(first->gt.rows(), first->gt.cols())) {
        throw Error(ErrorKind::dimension, "dataset '" + d.id + "' mixes image shapes");
      }
    }
  }
}

void check_plan(std::span<const SyntheticDataset> data, const MixPlan& plan) {
  validate(plan);
  if (plan.datasets.size() != data.size()) {
    throw Error(ErrorKind::configuration, "mix plan and data disagree on the dataset count");
  }
  for (std::size_t l = 0; l < data.size(); ++l) {
    if (plan.datasets[l].size != data[l].samples.size()) {
      throw Error(ErrorKind::configuration,
                  "mix plan size of '" + plan.datasets[l].id + "' does not match its samples");
    }
  }
}

LossResult evaluate(const ToyPredictor& predictor, const SyntheticDataset& d, std::size_t dataset,
                    std::size_t sample, const LossSpec& loss) {
  const Sample& s = d.samples[sample];
  try {
    return total_loss(predictor.predict(dataset, sample, s), s.gt, s.mask, loss.total, loss.trim,
                      loss.gm);
  } catch (const Error& e) {
    throw Error(e.kind(), "dataset '" + d.id + "' sample " + std::to_string(sample) + ": " +
                              e.what());
  }
}

// Mean loss and mean theta-gradient of each dataset's slice of `batch`.
struct SliceEval {
  std::vector<double> loss;
  std::vector<TaskGradient> grads;
};

SliceEval evaluate_batch(std::span<const SyntheticDataset> data, const ToyPredictor& predictor,
                         const LossSpec& loss, const std::vector<SampleRef>& batch,
                         std::size_t per_dataset) {
  const std::size_t n = predictor.theta().size();
  SliceEval out;
  out.loss.assign(data.size(), 0.0);
  for (const auto& d : data) out.grads.push_back({d.id, std::vector<double>(n, 0.0)});
  const double w = 1.0 / static_cast<double>(per_dataset);
  // Batches are emitted dataset-major; summation follows batch order.
  for (const SampleRef& ref : batch) {
    const SyntheticDataset& d = data[ref.dataset];
    const LossResult r = evaluate(predictor, d, ref.dataset, ref.index, loss);
    out.loss[ref.dataset] += w * r.value;
    predictor.backprop(ref.dataset, ref.index, d.samples[ref.index], r.grad, w,
                       out.grads[ref.dataset].g);
  }
  return out;
}

std::vector<double> uniform_weights(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

enum class Mixing { naive, pareto };

TrainResult train(std::span<const SyntheticDataset> data, const LossSpec& loss,
                  const OptimizerConfig& opt, const MixPlan& plan, std::uint64_t seed,
                  ToyPredictor predictor, Mixing mixing, const FrankWolfeOptions& fw) {
  check_shapes(data);
  check_plan(data, plan);
  validate(opt);

  MixSampler sampler(plan, seed);
  Optimizer optimizer(opt, predictor.theta().size());
  TrainTrace trace;
  for (const auto& d : data) trace.dataset_ids.push_back(d.id);

  const std::vector<double> equal = uniform_weights(data.size());
  for (std::size_t step = 0; step < opt.steps; ++step) {
    const std::vector<SampleRef> batch = sampler.next_batch();
    SliceEval eval = evaluate_batch(data, predictor, loss, batch, sampler.per_dataset());
    SimplexWeights w{equal};
    if (mixing == Mixing::pareto) w = min_norm_fw(eval.grads, fw);
    const std::vector<double> direction = combine(eval.grads, w);

    trace.losses.push_back(std::move(eval.loss));
    if (mixing == Mixing::pareto) trace.weights.push_back(w.alpha);
    trace.direction_norm.push_back(std::sqrt(squared_norm(direction)));
    optimizer.step(predictor.theta(), direction);
  }
  return {std::move(predictor), std::move(trace)};
}

ToyPredictor initial_predictor(std::span<const SyntheticDataset> data, PredictorKind kind,
                               std::size_t num_features, std::uint64_t seed) {
  // Offset so the initial parameters are decorrelated from the sampler stream.
  const std::uint64_t init_seed = seed ^ 0x9e3779b97f4a7c15ULL;
  if (kind == PredictorKind::free_grid) return ToyPredictor::free_grid(data, init_seed);
  if (num_features == 0) {
    throw Error(ErrorKind::configuration, "linear_features predictor needs num_features >= 1");
  }
  return ToyPredictor::linear_features(num_features, init_seed);
}

}  // namespace

Grid smooth_field(std::size_t rows, std::size_t cols, Rng& rng) {
  Grid g(rows, cols, 0.0, Unit::disparity);
  double amplitude_sum = 0.0;
  for (int mode = 0; mode < 5; ++mode) {
    const double amp = rng.uniform(0.1, 1.0);
    const double fx = rng.uniform(0.0, 3.0);
    const double fy = rng.uniform(0.0, 3.0);
    const double phase = rng.uniform(0.0, kTwoPi);
    amplitude_sum += amp;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double x = static_cast<double>(c) / static_cast<double>(cols);
        const double y = static_cast<double>(r) / static_cast<double>(rows);
        g(r, c) += amp * std::cos(kTwoPi * (fx * x + fy * y) + phase);
      }
    }
  }
  for (double& v : g.values()) v += amplitude_sum + 0.1;
  return g;
}

SyntheticDataset make_field_dataset(std::string id, const SyntheticConfig& cfg,
                                    std::uint64_t seed) {
  Rng rng(seed);
  const AffineMap corruption = draw_affine(rng, cfg.affine_corruption);
  SyntheticDataset d{std::move(id), {}};
  for (std::size_t n = 0; n < cfg.samples; ++n) {
    Grid gt = smooth_field(cfg.rows, cfg.cols, rng);
    apply(gt, corruption);
    d.samples.push_back({std::move(gt), Mask(cfg.rows, cfg.cols, true), {}});
  }
  return d;
}

SyntheticDataset make_linear_dataset(std::string id, const SyntheticConfig& cfg,
                                     std::span<const double> true_weights, std::uint64_t seed) {
  if (true_weights.empty()) throw Error(ErrorKind::configuration, "need at least one feature");
  Rng rng(seed);
  const AffineMap corruption = draw_affine(rng, cfg.affine_corruption);
  SyntheticDataset d{std::move(id), {}};
  for (std::size_t n = 0; n < cfg.samples; ++n) {
    Sample s{Grid(cfg.rows, cfg.cols, 0.0, Unit::disparity), Mask(cfg.rows, cfg.cols, true), {}};
    for (double w : true_weights) {
      Grid f = smooth_field(cfg.rows, cfg.cols, rng);
      for (std::size_t i = 0; i < f.size(); ++i) s.gt[i] += w * f[i];
      s.features.push_back(std::move(f));
    }
    apply(s.gt, corruption);
    d.samples.push_back(std::move(s));
  }
  return d;
}

ToyPredictor ToyPredictor::free_grid(std::span<const SyntheticDataset> data, std::uint64_t seed) {
  check_shapes(data);
  const Grid& shape = data.front().samples.front().gt;
  const std::size_t pixels = shape.size();
  std::vector<std::size_t> offsets;
  std::size_t images = 0;
  for (const auto& d : data) {
    offsets.push_back(images);
    images += d.samples.size();
  }
  Rng rng(seed);
  std::vector<double> theta(images * pixels);
  for (double& v : theta) v = 0.1 * rng.normal();
  ToyPredictor p(PredictorKind::free_grid, std::move(theta));
  p.dataset_offsets_ = std::move(offsets);
  p.pixels_ = pixels;
  return p;
}

ToyPredictor ToyPredictor::linear_features(std::size_t num_features, std::uint64_t seed) {
  if (num_features == 0) throw Error(ErrorKind::configuration, "need at least one feature");
  Rng rng(seed);
  std::vector<double> theta(num_features);
  for (double& v : theta) v = 0.5 * rng.normal();
  return ToyPredictor(PredictorKind::linear_features, std::move(theta));
}

std::size_t ToyPredictor::grid_offset(std::size_t dataset, std::size_t sample) const {
  return (dataset_offsets_.at(dataset) + sample) * pixels_;
}

Grid ToyPredictor::predict(std::size_t dataset, std::size_t sample, const Sample& s) const {
  Grid out(s.gt.rows(), s.gt.cols(), 0.0, Unit::disparity);
  if (kind_ == PredictorKind::free_grid) {
    if (out.size() != pixels_) throw Error(ErrorKind::dimension, "sample shape mismatch");
    const std::size_t off = grid_offset(dataset, sample);
    if (off + pixels_ > theta_.size()) throw Error(ErrorKind::dimension, "sample out of range");
    for (std::size_t i = 0; i < pixels_; ++i) out[i] = theta_[off + i];
    return out;
  }
  if (s.features.size() != theta_.size()) {
    throw Error(ErrorKind::dimension, "sample has " + std::to_string(s.features.size()) +
                                          " feature maps, predictor expects " +
                                          std::to_string(theta_.size()));
  }
  for (std::size_t f = 0; f < theta_.size(); ++f) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += theta_[f] * s.features[f][i];
  }
  return out;
}

void ToyPredictor::backprop(std::size_t dataset, std::size_t sample, const Sample& s,
                            const Grid& dpred, double weight,
                            std::span<double> grad_theta) const {
  if (grad_theta.size() != theta_.size()) {
    throw Error(ErrorKind::dimension, "gradient buffer does not match parameter count");
  }
  if (kind_ == PredictorKind::free_grid) {
    const std::size_t off = grid_offset(dataset, sample);
    for (std::size_t i = 0; i < pixels_; ++i) grad_theta[off + i] += weight * dpred[i];
    return;
  }
  for (std::size_t f = 0; f < theta_.size(); ++f) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dpred.size(); ++i) acc += dpred[i] * s.features[f][i];
    grad_theta[f] += weight * acc;
  }
}

void validate(const OptimizerConfig& cfg) {
  if (!(cfg.lr >= 0.0) || !std::isfinite(cfg.lr)) {
    throw Error(ErrorKind::configuration, "learning rate must be finite and >= 0");
  }
  if (cfg.algorithm == OptimizerKind::adam) {
    if (!(cfg.beta1 > 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 > 0.0 && cfg.beta2 < 1.0)) {
      throw Error(ErrorKind::configuration, "adam betas must lie in (0, 1)");
    }
    if (!(cfg.epsilon > 0.0)) throw Error(ErrorKind::configuration, "adam epsilon must be > 0");
  }
}

Optimizer::Optimizer(const OptimizerConfig& cfg, std::size_t num_params) : cfg_(cfg) {
  validate(cfg_);
  if (cfg_.algorithm == OptimizerKind::adam) {
    m_.assign(num_params, 0.0);
    v_.assign(num_params, 0.0);
  }
}

double Optimizer::current_lr() const {
  if (!cfg_.cosine_decay || cfg_.steps == 0) return cfg_.lr;
  const double progress = static_cast<double>(t_) / static_cast<double>(cfg_.steps);
  return cfg_.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * std::min(progress, 1.0)));
}

void Optimizer::step(std::span<double> theta, std::span<const double> direction) {
  if (theta.size() != direction.size()) {
    throw Error(ErrorKind::dimension, "optimizer: parameter and direction sizes differ");
  }
  const double lr = current_lr();
  ++t_;
  if (cfg_.algorithm == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * direction[i];
    return;
  }
  if (m_.size() != theta.size()) throw Error(ErrorKind::dimension, "optimizer: size changed");
  const double t = static_cast<double>(t_);
  const double c1 = 1.0 - std::pow(cfg_.beta1, t);
  const double c2 = 1.0 - std::pow(cfg_.beta2, t);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = direction[i];
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    theta[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
  }
}

MixPlan plan_for(std::span<const SyntheticDataset> data, std::size_t batch_size) {
  MixPlan plan;
  plan.batch_size = batch_size;
  for (const auto& d : data) plan.datasets.push_back({d.id, d.samples.size(), ""});
  return plan;
}

TrainResult train_naive(std::span<const SyntheticDataset> data, const LossSpec& loss,
                        const OptimizerConfig& opt, const MixPlan& plan, std::uint64_t seed,
                        ToyPredictor init) {
  return train(data, loss, opt, plan, seed, std::move(init), Mixing::naive, {});
}

TrainResult train_naive(std::span<const SyntheticDataset> data, const LossSpec& loss,
                        const OptimizerConfig& opt, const MixPlan& plan, std::uint64_t seed,
                        PredictorKind kind, std::size_t num_features) {
  check_shapes(data);
  return train_naive(data, loss, opt, plan, seed,
                     initial_predictor(data, kind, num_features, seed));
}

TrainResult train_pareto(std::span<const SyntheticDataset> data, const LossSpec& loss,
                         const OptimizerConfig& opt, const MixPlan& plan, std::uint64_t seed,
                         ToyPredictor init, const FrankWolfeOptions& fw) {
  return train(data, loss, opt, plan, seed, std::move(init), Mixing::pareto, fw);
}

TrainResult train_pareto(std::span<const SyntheticDataset> data, const LossSpec& loss,
                         const OptimizerConfig& opt, const MixPlan& plan, std::uint64_t seed,
                         PredictorKind kind, std::size_t num_features) {
  check_shapes(data);
  return train_pareto(data, loss, opt, plan, seed,
                      initial_predictor(data, kind, num_features, seed));
}

std::vector<double> dataset_losses(std::span<const SyntheticDataset> data,
                                   const ToyPredictor& predictor, const LossSpec& loss) {
  std::vector<double> out;
  for (std::size_t l = 0; l < data.size(); ++l) {
    double acc = 0.0;
    for (std::size_t n = 0; n < data[l].samples.size(); ++n) {
      acc += evaluate(predictor, data[l], l, n, loss).value;
    }
    out.push_back(acc / static_cast<double>(data[l].samples.size()));
  }
  return out;
}

std::vector<TaskGradient> dataset_gradients(std::span<const SyntheticDataset> data,
                                            const ToyPredictor& predictor, const LossSpec& loss) {
  std::vector<TaskGradient> out;
  for (std::size_t l = 0; l < data.size(); ++l) {
    TaskGradient t{data[l].id, std::vector<double>(predictor.theta().size(), 0.0)};
    const double w = 1.0 / static_cast<double>(data[l].samples.size());
    for (std::size_t n = 0; n < data[l].samples.size(); ++n) {
      const LossResult r = evaluate(predictor, data[l], l, n, loss);
      predictor.backprop(l, n, data[l].samples[n], r.grad, w, t.g);
    }
    out.push_back(std::move(t));
  }
  return out;
}

void write_trace_csv(std::ostream& out, const TrainTrace& trace) {
  out << "step";
  for (const auto& id : trace.dataset_ids) out << ",loss_" << id;
  const bool weights = !trace.weights.empty();
  if (weights) {
    for (const auto& id : trace.dataset_ids) out << ",weight_" << id;
  }
  out << ",direction_norm\n";
  for (std::size_t step = 0; step < trace.losses.size(); ++step) {
    out << step;
    for (double v : trace.losses[step]) out << ',' << shortest(v);
    if (weights) {
      for (double v : trace.weights[step]) out << ',' << shortest(v);
    }
    out << ',' << shortest(trace.direction_norm[step]) << '\n';
  }
}

double inlier_rmse(const Grid& pred, const Grid& clean, const Mask& inliers) {
  require_same_shape(pred, clean, "inlier_rmse");
  const RobustStats p = robust_stats(pred, inliers);
  const RobustStats c = robust_stats(clean, inliers);
  if (!(p.scale > 0.0)) throw Error(ErrorKind::degenerate_scale, "inlier_rmse: constant prediction");
  // Least-squares alignment admits a negative scale, so the orientation comes
  // from the sign of the inlier covariance.
  double cov = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (inliers[i]) cov += (pred[i] - p.shift) * (clean[i] - c.shift);
  }
  const double sign = cov < 0.0 ? -1.0 : 1.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!inliers[i]) continue;
    const double aligned = sign * (pred[i] - p.shift) / p.scale * c.scale + c.shift;
    const double e = aligned - clean[i];
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(inliers.count()));
}

RobustnessReport robustness_experiment(const RobustnessConfig& cfg) {
  if (cfg.grid_size < 2) throw Error(ErrorKind::configuration, "grid_size must be >= 2");
  if (!(cfg.outlier_fraction >= 0.0) || cfg.outlier_fraction > cfg.trim.trim_fraction) {
    throw Error(ErrorKind::configuration,
                "outlier_fraction must lie in [0, trim_fraction] for the trimmed loss");
  }
  validate(cfg.opt);

  const std::size_t n = cfg.grid_size;
  Rng rng(cfg.seed);
  const Grid clean = smooth_field(n, n, rng);
  const std::size_t pixels = clean.size();
  const auto outliers = static_cast<std::size_t>(
      std::llround(cfg.outlier_fraction * static_cast<double>(pixels)));

  std::vector<std::size_t> order(pixels);
  for (std::size_t i = 0; i < pixels; ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));

  SyntheticDataset data{"robustness", {{clean, Mask(n, n, true), {}}}};
  Mask inliers(n, n, true);
  Grid& corrupted = data.samples.front().gt;
  for (std::size_t k = 0; k < outliers; ++k) {
    const double sgn = rng.uniform() < 0.5 ? -1.0 : 1.0;
    corrupted[order[k]] += sgn * cfg.outlier_magnitude;
    inliers.set(order[k], false);
  }

  const std::span<const SyntheticDataset> span(&data, 1);
  const MixPlan plan = plan_for(span, 1);
  auto run = [&](BaseLoss base) {
    LossSpec loss{{cfg.alpha, base}, cfg.trim, cfg.gm};
    ToyPredictor init = ToyPredictor::free_grid(span, cfg.seed + 1);
    const TrainResult res = train_naive(span, loss, cfg.opt, plan, cfg.seed, std::move(init));
    const Grid pred = res.predictor.predict(0, 0, data.samples.front());
    return inlier_rmse(pred, clean, inliers);
  };

  RobustnessReport report;
  report.inlier_rmse_ssitrim = run(BaseLoss::ssitrim);
  report.inlier_rmse_ssimse = run(BaseLoss::ssimse);
  report.inlier_rmse_ssimae = run(BaseLoss::ssimae);
  report.outliers = outliers;
  return report;
}

}  // namespace ssidepth
