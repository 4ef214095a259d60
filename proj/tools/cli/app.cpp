#include "cli/app.hpp"

#include <algorithm>
#include <exception>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cli/commands.hpp"
#include "ssidepth/error.hpp"

namespace ssidepth::cli {

namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::configuration: return config_error;
    case ErrorKind::io: return io_error;
    case ErrorKind::parse:
    case ErrorKind::dimension: return parse_error;
    default: return is_numerical(kind) ? numerical_error : parse_error;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scale- and shift-invariant depth losses, multi-dataset mixing, evaluation and "
               "stereo frame filtering"};
  app.name(args.empty() ? "ssidepth" : args.front());
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  LossOptions lo;
  auto* loss = app.add_subcommand("loss", "Evaluate one loss and its gradient on PFM inputs");
  loss->add_option("--pred", lo.pred, "Prediction PFM")->required();
  loss->add_option("--gt", lo.gt, "Ground-truth PFM")->required();
  loss->add_option("--mask", lo.mask, "Validity mask PGM (nonzero = valid; default all valid)");
  loss->add_option("--loss", lo.loss, "ssimse|ssimae|ssitrim|silog|ordinal|nmg|total")
      ->capture_default_str()
      ->check(CLI::IsMember({"ssimse", "ssimae", "ssitrim", "silog", "ordinal", "nmg", "total"}));
  loss->add_option("--base", lo.base, "Base loss of --loss total: ssimse|ssimae|ssitrim")
      ->capture_default_str()
      ->check(CLI::IsMember({"ssimse", "ssimae", "ssitrim"}));
  loss->add_option("--alpha", lo.alpha, "Gradient-matching weight (standard: 0.5)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  loss->add_option("--trim", lo.trim, "Trimmed fraction of largest residuals (standard: 0.2)")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 0.999999));
  loss->add_option("--levels", lo.levels, "Gradient scale levels K (standard: 4)")
      ->capture_default_str()
      ->check(CLI::Range(1, 30));
  loss->add_option("--pairs", lo.pairs, "Ordinal point pairs (standard: 5000)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  loss->add_option("--ratio", lo.ratio, "Ordinal equality ratio threshold")
      ->capture_default_str();
  loss->add_option("--seed", lo.seed, "Ordinal pair sampling seed")->capture_default_str();
  loss->add_option("--grad-out", lo.grad_out, "Write the gradient grid to this PFM");

  EvalOptions eo;
  auto* eval = app.add_subcommand("eval", "Zero-shot evaluation of predictions against a manifest");
  eval->add_option("--manifest", eo.manifest,
                   "JSON {\"schema\":1,\"images\":[{\"id\",\"gt\",\"mask\"}],\"annotations\"}")
      ->required();
  eval->add_option("--pred-dir", eo.pred_dir, "Directory of <id>.pfm disparity predictions")
      ->required();
  eval->add_option("--descriptor", eo.descriptor,
                   "Dataset descriptor JSON {name, metric, cap_meters, gt_unit, max_gt_depth}");
  eval->add_option("--dataset", eo.dataset,
                   "Built-in descriptor: DIW (WHDR), ETH3D (AbsRel, cap 72 m), Sintel (AbsRel, "
                   "cap 72 m, gt < 72 m), KITTI (delta>1.25, cap 80 m), NYU (delta>1.25, cap "
                   "10 m), TUM (delta>1.25, cap 10 m)")
      ->check(CLI::IsMember({"DIW", "ETH3D", "Sintel", "KITTI", "NYU", "TUM"}));
  eval->add_option("--csv", eo.csv_out, "Per-image CSV output");
  eval->add_option("--report", eo.report_out, "Aggregate JSON output (also printed)");

  FilterOptions fo;
  auto* filter = app.add_subcommand("filter-frames", "Stereo frame quality gating on flow fields");
  filter->add_option("--manifest", fo.manifest, "CSV frame_id,u_lr,v_lr,u_rl,v_rl of flow PFMs")
      ->required();
  filter->add_option("--out-dir", fo.out_dir, "Per-frame JSON reports and accepted.csv");
  filter->add_option("--vertical-px", fo.vertical_px, "Vertical disparity limit in px (standard: 2)")
      ->capture_default_str();
  filter->add_option("--vertical-fraction", fo.vertical_fraction,
                     "Max fraction of pixels over the vertical limit (standard: 10%)")
      ->capture_default_str();
  filter->add_option("--horizontal-range", fo.horizontal_range,
                     "Min horizontal disparity range in px (standard: 10)")
      ->capture_default_str();
  filter->add_option("--pass-rate", fo.pass_rate,
                     "Min left-right consistency pass rate (standard: 70%)")
      ->capture_default_str();
  filter->add_option("--lr-threshold", fo.lr_threshold,
                     "Left-right consistency tolerance in px (standard: 2)")
      ->capture_default_str();

  TrainOptions to;
  auto* train = app.add_subcommand("train-toy", "Desk-scale naive/Pareto mixing or robustness run");
  train->add_option("--config", to.config, "JSON config with \"schema\": 1")
      ->required();
  train->add_option("--trace", to.trace_out, "Per-step trace CSV");
  train->add_option("--report", to.report_out, "Final report JSON (also printed)");
  train->add_option("--seed", to.seed, "Override the config seed");
  train->add_option("--steps", to.steps, "Override optimizer steps");
  train->add_option("--lr", to.lr, "Override learning rate (standard: 1e-4)");
  train->add_option("--beta1", to.beta1, "Override Adam beta1 (standard: 0.9)");
  train->add_option("--beta2", to.beta2, "Override Adam beta2 (standard: 0.999)");
  train->add_option("--alpha", to.alpha, "Override gradient-matching weight (standard: 0.5)");
  train->add_option("--trim", to.trim, "Override trimmed fraction (standard: 0.2)");
  train->add_option("--levels", to.levels, "Override gradient scale levels (standard: 4)");

  MgdaOptions mo;
  auto* mgda = app.add_subcommand("mgda", "Min-norm simplex weights for per-dataset gradients");
  mgda->add_option("--grads", mo.grads, "CSV rows dataset_id,g_1,...,g_n")
      ->required();
  mgda->add_option("--max-iter", mo.max_iter, "Frank-Wolfe iteration cap")->capture_default_str();
  mgda->add_option("--tol", mo.tol, "Frank-Wolfe duality gap tolerance")->capture_default_str();

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : config_error;
  }

  try {
    if (*loss) cmd_loss(lo, out);
    if (*eval) cmd_eval(eo, out);
    if (*filter) cmd_filter_frames(fo, out);
    if (*train) cmd_train_toy(to, out);
    if (*mgda) cmd_mgda(mo, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "error (parse): " << e.what() << '\n';
    return parse_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return ok;
}

}  // namespace ssidepth::cli
