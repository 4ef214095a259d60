#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace ssidepth::cli {

struct LossOptions {
  std::string pred;
  std::string gt;
  std::string mask;  // empty: every pixel valid
  std::string loss = "ssitrim";
  std::string base = "ssitrim";  // base of --loss total
  double alpha = 0.5;
  double trim = 0.2;
  int levels = 4;
  std::size_t pairs = 5000;
  double ratio = 1.02;
  std::uint64_t seed = 0;
  std::string grad_out;
};

struct EvalOptions {
  std::string manifest;
  std::string pred_dir;
  std::string descriptor;  // JSON file
  std::string dataset;     // built-in descriptor name, alternative to `descriptor`
  std::string csv_out;
  std::string report_out;
};

struct FilterOptions {
  std::string manifest;
  std::string out_dir;
  double vertical_px = 2.0;
  double vertical_fraction = 0.10;
  double horizontal_range = 10.0;
  double pass_rate = 0.70;
  double lr_threshold = 2.0;
};

struct TrainOptions {
  std::string config;
  std::string trace_out;
  std::string report_out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
  std::optional<double> lr;
  std::optional<double> beta1;
  std::optional<double> beta2;
  std::optional<double> alpha;
  std::optional<double> trim;
  std::optional<int> levels;
};

struct MgdaOptions {
  std::string grads;
  int max_iter = 250;
  double tol = 1e-8;
};

void cmd_loss(const LossOptions& o, std::ostream& out);
void cmd_eval(const EvalOptions& o, std::ostream& out);
void cmd_filter_frames(const FilterOptions& o, std::ostream& out);
void cmd_train_toy(const TrainOptions& o, std::ostream& out);
void cmd_mgda(const MgdaOptions& o, std::ostream& out);

}  // namespace ssidepth::cli
