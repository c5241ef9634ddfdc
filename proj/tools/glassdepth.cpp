#include <iostream>

#include <CLI11.hpp>

#include "glassdepth/commands.hpp"
#include "glassdepth/dataset.hpp"

using namespace glassdepth;

namespace {

void add_dataset_option(CLI::App* cmd, fs::path& root, bool required) {
  auto* opt = cmd->add_option("--dataset", root, "Dataset root (default: $GLASSDEPTH_DATASET_ROOT)");
  if (required && !dataset_root_from_env()) opt->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Glass-aware depth alignment, annotation and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<double> depth_scale;
  app.add_option("--depth-scale", depth_scale, "16-bit depth units per meter")
      ->check(CLI::PositiveNumber);

  // align
  AlignOptions align;
  fs::path align_dataset;
  auto* align_cmd = app.add_subcommand("align", "Scale-shift align a depth prior to raw sensor depth");
  align_cmd->add_option("--raw", align.raw, "Raw sensor depth (.png, .pfm, .npy)");
  align_cmd->add_option("--prior", align.prior, "Affine-invariant prior (.pfm, .npy)");
  align_cmd->add_option("--intrinsics", align.intrinsics, "Intrinsics record to check dimensions against");
  align_cmd->add_option("--output,-o", align.output, "Aligned depth (.pfm, .npy, .png)");
  align_cmd->add_option("--metadata", align.metadata, "Metadata record (default: <output>.json)");
  align_cmd->add_option("--dataset", align_dataset, "Dataset root for batch mode");
  align_cmd->add_option("--priors", align.prior_dir, "Directory of <id>.pfm/.npy priors (batch mode)");
  align_cmd->add_option("--out-dir", align.output_dir, "Output directory (batch mode)");
  align_cmd->add_option("--out-ext", align.output_ext, "Output extension (batch mode)")
      ->check(CLI::IsMember({".pfm", ".npy", ".png"}));
  align_cmd->add_flag("--global", align.global, "Least squares over all pixels instead of RANSAC");
  align_cmd->add_flag("--invert-prior", align.invert, "Treat the prior as disparity");
  align_cmd->add_option("--grid-n", align.ransac.grid_n, "Patches per image side");
  align_cmd->add_option("--iterations", align.ransac.iterations_per_patch, "Candidates per patch");
  align_cmd->add_option("--samples", align.ransac.samples_per_iteration, "Pixels per candidate");
  align_cmd->add_option("--seed", align.ransac.rng_seed, "RNG seed");
  align_cmd->add_option("--min-prior-spread", align.ransac.min_prior_spread, "Degeneracy threshold");
  align_cmd->add_option("--jobs,-j", align.jobs, "Worker threads")->check(CLI::PositiveNumber);

  // annotate
  AnnotateOptions annotate;
  auto* annotate_cmd = app.add_subcommand("annotate", "Generate plane ground truth from stored clicks");
  add_dataset_option(annotate_cmd, annotate.dataset, true);
  annotate_cmd->add_flag("--include-pending", annotate.include_pending,
                         "Also process annotations not yet reviewed");
  annotate_cmd->add_option("--jobs,-j", annotate.jobs, "Samples processed concurrently")
      ->check(CLI::PositiveNumber);

  // eval
  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate predictions against ground truth");
  add_dataset_option(eval_cmd, eval.dataset, true);
  eval_cmd->add_option("--pred", eval.prediction_dir, "Directory of <id>.pfm/.npy/.png predictions")
      ->required();
  eval_cmd->add_option("--report", eval.report, "JSON report path")->required();
  eval_cmd->add_option("--table", eval.table, "Plain-text table path");
  eval_cmd->add_option("--method", eval.method_name, "Method name for the table");
  eval_cmd->add_option("--pred-scale", eval.prediction_scale, "Units per meter of .png predictions")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--jobs,-j", eval.jobs, "Samples processed concurrently")->check(CLI::PositiveNumber);

  // export
  ExportOptions exp;
  double origin_x = 0.0, origin_y = 0.0;
  auto* export_cmd = app.add_subcommand("export", "Export a point cloud and occupancy grid");
  export_cmd->add_option("--depth", exp.depth, "Metric depth (.png, .pfm, .npy)")->required();
  export_cmd->add_option("--intrinsics", exp.intrinsics, "Intrinsics record")->required();
  export_cmd->add_option("--cloud", exp.cloud, "PLY output");
  export_cmd->add_option("--grid", exp.grid, "PGM output (YAML sidecar alongside)");
  export_cmd->add_option("--stride", exp.stride, "Pixel stride")->check(CLI::PositiveNumber);
  export_cmd->add_option("--camera-height", exp.camera_height, "Camera height above ground, meters");
  export_cmd->add_option("--resolution", exp.grid_config.resolution, "Cell size, meters");
  export_cmd->add_option("--z-min", exp.grid_config.z_min, "Obstacle band bottom, meters");
  export_cmd->add_option("--z-max", exp.grid_config.z_max, "Obstacle band top, meters");
  auto* ox = export_cmd->add_option("--origin-x", origin_x, "Grid origin x, meters");
  auto* oy = export_cmd->add_option("--origin-y", origin_y, "Grid origin y, meters");
  ox->needs(oy);
  oy->needs(ox);
  export_cmd->add_option("--size-x", exp.grid_config.size_x, "Cells along x (0 = fit)");
  export_cmd->add_option("--size-y", exp.grid_config.size_y, "Cells along y (0 = fit)");

  // serve
  ServeOptions serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the annotation service");
  add_dataset_option(serve_cmd, serve.dataset, true);
  serve_cmd->add_option("--host", serve.host, "Listen address");
  serve_cmd->add_option("--port", serve.port, "Listen port (0 picks a free one)")
      ->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--preview-stride", serve.preview_stride, "Preview cloud decimation")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInputError;
  }

  const auto env_root = dataset_root_from_env();
  auto root_or_env = [&](fs::path& root) {
    if (root.empty() && env_root) root = *env_root;
  };

  if (*align_cmd) {
    align.depth_scale = depth_scale;
    if (!align_dataset.empty()) align.dataset = align_dataset;
    return run_align(align, std::cout, std::cerr);
  }
  if (*annotate_cmd) {
    root_or_env(annotate.dataset);
    annotate.depth_scale = depth_scale;
    return run_annotate(annotate, std::cout, std::cerr);
  }
  if (*eval_cmd) {
    root_or_env(eval.dataset);
    eval.depth_scale = depth_scale;
    return run_eval(eval, std::cout, std::cerr);
  }
  if (*export_cmd) {
    exp.depth_scale = depth_scale;
    if (ox->count() > 0) exp.grid_config.origin = Eigen::Vector2d(origin_x, origin_y);
    return run_export(exp, std::cout, std::cerr);
  }
  root_or_env(serve.dataset);
  serve.depth_scale = depth_scale;
  return run_serve(serve, std::cout, std::cerr);
}
