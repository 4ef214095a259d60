#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ssidepth/grid.hpp"
#include "ssidepth/losses.hpp"
#include "ssidepth/mo_opt.hpp"
#include "ssidepth/random.hpp"
#include "ssidepth/sampler.hpp"

namespace ssidepth {

// One training image: ground-truth disparity, its validity mask and, for the
// linear-features predictor, the per-pixel feature maps.
struct Sample {
  Grid gt;
  Mask mask;
  std::vector<Grid> features;
};

struct SyntheticDataset {
  std::string id;
  std::vector<Sample> samples;
};

// Sum of five random 2-D cosine modes with amplitudes in [0.1, 1], shifted so
// every value is at least 0.1.
Grid smooth_field(std::size_t rows, std::size_t cols, Rng& rng);

struct SyntheticConfig {
  std::size_t rows = 16;
  std::size_t cols = 16;
  std::size_t samples = 4;
  // Ground truth of each sample goes through one random affine map per
  // dataset (scale in [0.5, 2], shift in [-0.5, 0.5]).
  bool affine_corruption = true;
};

// Samples whose ground truth is an independent smooth field.
SyntheticDataset make_field_dataset(std::string id, const SyntheticConfig& cfg,
                                    std::uint64_t seed);

// Samples with len(true_weights) smooth feature maps each; ground truth is
// sum_f true_weights[f] * feature_f before the dataset's affine map, so a
// linear-features predictor can fit every sample exactly.
SyntheticDataset make_linear_dataset(std::string id, const SyntheticConfig& cfg,
                                     std::span<const double> true_weights, std::uint64_t seed);

enum class PredictorKind { free_grid, linear_features };

// Parameters theta and the map from theta to per-sample predictions.
//   free_grid:       theta holds one prediction grid per image, datasets in
//                    order, samples in order within each dataset.
//   linear_features: theta is one weight per feature map, shared by all images.
class ToyPredictor {
 public:
  // Small seeded noise for every image so no initial prediction is constant.
  static ToyPredictor free_grid(std::span<const SyntheticDataset> data, std::uint64_t seed);
  // Weights drawn from N(0, 0.5^2).
  static ToyPredictor linear_features(std::size_t num_features, std::uint64_t seed);

  PredictorKind kind() const noexcept { return kind_; }
  std::span<const double> theta() const noexcept { return theta_; }
  std::span<double> theta() noexcept { return theta_; }

  Grid predict(std::size_t dataset, std::size_t sample, const Sample& s) const;

  // grad_theta += weight * d(loss)/d(theta) given d(loss)/d(prediction).
  void backprop(std::size_t dataset, std::size_t sample, const Sample& s, const Grid& dpred,
                double weight, std::span<double> grad_theta) const;

 private:
  ToyPredictor(PredictorKind kind, std::vector<double> theta) : kind_(kind), theta_(std::move(theta)) {}

  std::size_t grid_offset(std::size_t dataset, std::size_t sample) const;

  PredictorKind kind_;
  std::vector<double> theta_;
  std::vector<std::size_t> dataset_offsets_;  // free_grid: first image index per dataset
  std::size_t pixels_ = 0;
};

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
  OptimizerKind algorithm = OptimizerKind::adam;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t steps = 1000;
  // Cosine-anneal the learning rate to 0 over `steps`.
  bool cosine_decay = false;
};

void validate(const OptimizerConfig& cfg);

// SGD or textbook Adam with bias correction.
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, std::size_t num_params);
  void step(std::span<double> theta, std::span<const double> direction);
  std::size_t steps_taken() const noexcept { return t_; }

 private:
  double current_lr() const;

  OptimizerConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

struct LossSpec {
  TotalLossConfig total;
  TrimConfig trim;
  GradMatchConfig gm;
};

// Per-step log. losses[step][l] is the mean loss of dataset l over its batch
// slice, evaluated before that step's update. weights[step] is empty for
// naive training.
struct TrainTrace {
  std::vector<std::string> dataset_ids;
  std::vector<std::vector<double>> losses;
  std::vector<std::vector<double>> weights;
  std::vector<double> direction_norm;
};

struct TrainResult {
  ToyPredictor predictor;
  TrainTrace trace;
};

// Equal-parts minibatches, one update per step along the mean gradient.
TrainResult train_naive(std::span<const SyntheticDataset> data, const LossSpec& loss,
                        const OptimizerConfig& opt, const MixPlan& plan, std::uint64_t seed,
                        ToyPredictor init);
TrainResult train_naive(std::span<const SyntheticDataset> data, const LossSpec& loss,
                        const OptimizerConfig& opt, const MixPlan& plan, std::uint64_t seed,
                        PredictorKind kind, std::size_t num_features = 0);

// Per-dataset gradients on each dataset's batch slice, combined with the
// min-norm simplex weights before the update.
TrainResult train_pareto(std::span<const SyntheticDataset> data, const LossSpec& loss,
                         const OptimizerConfig& opt, const MixPlan& plan, std::uint64_t seed,
                         ToyPredictor init, const FrankWolfeOptions& fw = {});
TrainResult train_pareto(std::span<const SyntheticDataset> data, const LossSpec& loss,
                         const OptimizerConfig& opt, const MixPlan& plan, std::uint64_t seed,
                         PredictorKind kind, std::size_t num_features = 0);

// Plan over `data` with the given batch size (ids and sizes copied).
MixPlan plan_for(std::span<const SyntheticDataset> data, std::size_t batch_size);

// Mean loss of every dataset over all of its samples.
std::vector<double> dataset_losses(std::span<const SyntheticDataset> data,
                                   const ToyPredictor& predictor, const LossSpec& loss);

// Full-dataset gradient of each dataset's mean loss with respect to theta.
std::vector<TaskGradient> dataset_gradients(std::span<const SyntheticDataset> data,
                                            const ToyPredictor& predictor, const LossSpec& loss);

// CSV: step, loss_<id>..., weight_<id>... (pareto only), direction_norm.
void write_trace_csv(std::ostream& out, const TrainTrace& trace);

struct RobustnessConfig {
  std::size_t grid_size = 32;
  double outlier_fraction = 0.2;
  double outlier_magnitude = 10.0;
  std::uint64_t seed = 0;
  double alpha = 0.5;
  GradMatchConfig gm;
  TrimConfig trim;
  OptimizerConfig opt{OptimizerKind::adam, 0.01, 0.9, 0.999, 1e-8, 3000, true};
};

struct RobustnessReport {
  double inlier_rmse_ssitrim = 0.0;
  double inlier_rmse_ssimse = 0.0;
  double inlier_rmse_ssimae = 0.0;
  std::size_t outliers = 0;
};

// Corrupts round(outlier_fraction * M) pixels of a smooth synthetic disparity
// map with +-outlier_magnitude, fits a free-grid predictor under each base
// loss plus alpha * gradient matching, and reports RMSE on the uncorrupted
// pixels after mapping the prediction into the clean map's median/MAD frame
// (both frames estimated over the uncorrupted pixels, orientation taken from
// the sign of their covariance).
RobustnessReport robustness_experiment(const RobustnessConfig& cfg);

// The alignment-then-RMSE used by robustness_experiment.
double inlier_rmse(const Grid& pred, const Grid& clean, const Mask& inliers);

}  // namespace ssidepth
